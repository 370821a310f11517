use rayon::prelude::*;
use serde::Serialize;

use super::verdict::{dips_below, CriterionKind, CriterionVerdict, Evidence};
use crate::error::{LabError, Result};
use crate::semigroups::Semiflow;
use crate::spaces::{BoxRegion, DomainSpec, WeightFunction};

/// `m_K(t)`, the mass of the forward image `phi(t, K)` under `rho_1 dx`.
#[derive(Debug, Clone, Serialize)]
pub struct MassCurve {
    pub compact: BoxRegion,
    pub times: Vec<f64>,
    pub masses: Vec<f64>,
    /// Quadrature nodes skipped because the flow or its Jacobian was singular there.
    pub excluded: Vec<usize>,
    pub orientation: &'static str,
}

struct Quadrature {
    nodes: Vec<Vec<f64>>,
    cell: f64,
}

fn quadrature(phi: &Semiflow, k: &BoxRegion, step: f64) -> Result<Quadrature> {
    if !(step > 0.0) {
        return Err(LabError::InvalidParameter(format!("quadrature step must be positive, got {step}")));
    }
    if k.dim() != phi.dim() {
        return Err(LabError::DimensionMismatch { expected: phi.dim(), got: k.dim() });
    }
    let (nodes, cell) = k.midpoint_nodes(step);
    if nodes.iter().any(|x| !phi.in_domain(x)) {
        return Err(LabError::InvalidDomain(format!("compact {:?}..{:?} is not inside the flow's domain", k.low, k.high)));
    }
    Ok(Quadrature { nodes, cell })
}

/// `rho_1(phi(t, x)) |det D phi(t, x)|` at the nodes, `None` where singular.
fn pushed_densities(rho1: &WeightFunction, phi: &Semiflow, nodes: &[Vec<f64>], t: f64) -> Vec<Option<f64>> {
    let mut y = vec![0.0; phi.dim()];
    nodes
        .iter()
        .map(|x| {
            if !phi.map(t, x, &mut y) {
                return None;
            }
            let det = phi.jac_det(t, x).abs();
            if !(det > 0.0 && det.is_finite()) {
                return None;
            }
            let v = (rho1.ln_eval(&y) + det.ln()).exp();
            v.is_finite().then_some(v)
        })
        .collect()
}

pub fn lp_mass_curve(rho1: &WeightFunction, phi: &Semiflow, k: &BoxRegion, time_grid: &[f64], step: f64) -> Result<MassCurve> {
    let q = quadrature(phi, k, step)?;
    let rows: Vec<(f64, usize)> = time_grid
        .par_iter()
        .map(|&t| {
            let d = pushed_densities(rho1, phi, &q.nodes, t);
            let excluded = d.iter().filter(|v| v.is_none()).count();
            (d.iter().flatten().sum::<f64>() * q.cell, excluded)
        })
        .collect();
    let (masses, excluded) = rows.into_iter().unzip();
    Ok(MassCurve { compact: k.clone(), times: time_grid.to_vec(), masses, excluded, orientation: "forward image phi(t, K)" })
}

/// Mass of `phi(t, L)` where `L` drops from `K` the nodes of largest pushed
/// density, up to a `mu`-mass budget.
fn refined_mass(rho1: &WeightFunction, phi: &Semiflow, q: &Quadrature, t: f64, budget: f64) -> f64 {
    let d = pushed_densities(rho1, phi, &q.nodes, t);
    let mut order: Vec<usize> = (0..q.nodes.len()).collect();
    order.sort_by(|&a, &b| d[b].unwrap_or(0.0).total_cmp(&d[a].unwrap_or(0.0)).then(a.cmp(&b)));
    let mut removed = 0.0;
    let mut total = 0.0;
    let mut dropping = true;
    for i in order {
        let own = rho1.eval(&q.nodes[i]) * q.cell;
        if dropping && removed + own <= budget {
            removed += own;
            continue;
        }
        dropping = false;
        total += d[i].unwrap_or(0.0) * q.cell;
    }
    total
}

/// For every compact `K`, `m_K(t)` (or its refinement over `L_n`, with
/// `mu(K \ L_n) <= 1/n` at the `n`-th time) dips below `tol`.
pub fn lp_semiflow_criterion(
    rho1: &WeightFunction,
    phi: &Semiflow,
    compacts: &[BoxRegion],
    time_grid: &[f64],
    step: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    let mut holds = true;
    let mut evidence = Vec::new();
    let mut notes = vec!["mass of the forward image phi(t, K)".to_string()];
    for (idx, k) in compacts.iter().enumerate() {
        let curve = lp_mass_curve(rho1, phi, k, time_grid, step)?;
        let q = quadrature(phi, k, step)?;
        let refined: Vec<f64> =
            time_grid.par_iter().enumerate().map(|(n, &t)| refined_mass(rho1, phi, &q, t, 1.0 / (n + 1) as f64)).collect();
        let plain: Vec<(f64, f64)> = curve.times.iter().copied().zip(curve.masses.iter().copied()).collect();
        let shrunk: Vec<(f64, f64)> = curve.times.iter().copied().zip(refined.iter().copied()).collect();
        let ok_plain = dips_below(&plain, tol);
        let ok_shrunk = dips_below(&shrunk, tol);
        holds &= ok_plain || ok_shrunk;
        notes.push(format!("K[{idx}]: L = K {}, refined L_n {}", pass(ok_plain), pass(ok_shrunk)));
        let excluded: usize = curve.excluded.iter().sum();
        if excluded > 0 {
            notes.push(format!("K[{idx}]: {excluded} singular node evaluations excluded"));
        }
        evidence.extend(plain.iter().map(|&(t, v)| Evidence::new(format!("m_K[{idx}]"), t, v)));
        evidence.extend(shrunk.iter().map(|&(t, v)| Evidence::new(format!("m_L[{idx}]"), t, v)));
    }
    Ok(CriterionVerdict {
        criterion: CriterionKind::LpSemiflowMass,
        holds,
        evidence,
        horizon: horizon_of(time_grid),
        tol,
        direction: None,
        notes,
    })
}

fn pass(b: bool) -> &'static str {
    if b {
        "dips"
    } else {
        "stays"
    }
}

fn horizon_of(time_grid: &[f64]) -> f64 {
    time_grid.iter().fold(0.0, |a: f64, t| a.max(t.abs()))
}

#[derive(Debug, Clone, Serialize)]
pub struct SupCurves {
    pub times: Vec<f64>,
    /// `sup rho` over `{x : phi(t, x) in K}`, 0 when empty.
    pub s_pre: Vec<f64>,
    /// `sup rho` over `phi(t, K)`.
    pub s_img: Vec<f64>,
}

pub fn c0_sup_curves(
    rho: &WeightFunction,
    phi: &Semiflow,
    domain: &DomainSpec,
    k: &BoxRegion,
    time_grid: &[f64],
    step: f64,
) -> Result<SupCurves> {
    let q = quadrature(phi, k, step)?;
    let scan: Vec<Vec<f64>> = if phi.has_inverse() { Vec::new() } else { domain.window().midpoint_nodes(step).0 };
    let rows: Vec<(f64, f64)> = time_grid
        .par_iter()
        .map(|&t| {
            let mut y = vec![0.0; phi.dim()];
            let mut img = f64::NEG_INFINITY;
            for x in &q.nodes {
                if phi.map(t, x, &mut y) {
                    img = img.max(rho.ln_eval(&y));
                }
            }
            let mut pre = f64::NEG_INFINITY;
            if phi.has_inverse() {
                for z in &q.nodes {
                    if phi.inverse_on_image(t, z, &mut y) && phi.in_domain(&y) {
                        pre = pre.max(rho.ln_eval(&y));
                    }
                }
            } else {
                for x in &scan {
                    if phi.map(t, x, &mut y) && k.contains(&y) {
                        pre = pre.max(rho.ln_eval(x));
                    }
                }
            }
            (pre.exp(), img.exp())
        })
        .collect();
    let (s_pre, s_img) = rows.into_iter().unzip();
    Ok(SupCurves { times: time_grid.to_vec(), s_pre, s_img })
}

/// For every compact `K`, `max(s_pre, s_img)` dips below `tol`.
pub fn c0_semiflow_criterion(
    rho: &WeightFunction,
    phi: &Semiflow,
    domain: &DomainSpec,
    compacts: &[BoxRegion],
    time_grid: &[f64],
    step: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    let mut holds = true;
    let mut evidence = Vec::new();
    let mut notes = Vec::new();
    for (idx, k) in compacts.iter().enumerate() {
        let q = quadrature(phi, k, step)?;
        let inf = q.nodes.iter().map(|x| rho.ln_eval(x)).fold(f64::INFINITY, f64::min);
        if !inf.is_finite() {
            return Err(LabError::Precondition(format!("inf of rho over K[{idx}] is not positive")));
        }
        let c = c0_sup_curves(rho, phi, domain, k, time_grid, step)?;
        let both: Vec<(f64, f64)> = c.times.iter().enumerate().map(|(i, &t)| (t, c.s_pre[i].max(c.s_img[i]))).collect();
        let ok = dips_below(&both, tol);
        holds &= ok;
        notes.push(format!("K[{idx}]: max(s_pre, s_img) {}", pass(ok)));
        for (i, &t) in c.times.iter().enumerate() {
            evidence.push(Evidence::new(format!("s_pre[{idx}]"), t, c.s_pre[i]));
            evidence.push(Evidence::new(format!("s_img[{idx}]"), t, c.s_img[i]));
        }
    }
    if !phi.has_inverse() {
        notes.push("preimages found by scanning the forward map over the window".into());
    }
    Ok(CriterionVerdict {
        criterion: CriterionKind::C0SemiflowSup,
        holds,
        evidence,
        horizon: horizon_of(time_grid),
        tol,
        direction: None,
        notes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::criteria::TOL_CRIT;
    use crate::recurrence::lattice_times;
    use crate::semigroups::CustomFlow;
    use crate::spaces::{DomainKind, WeightShape};

    fn unit() -> BoxRegion {
        BoxRegion::interval(0.0, 1.0).unwrap()
    }

    #[test]
    fn mass_at_time_zero_is_mu_of_k() {
        let rho = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        let phi = Semiflow::translation(1, DomainKind::HalfLine);
        let c = lp_mass_curve(&rho, &phi, &unit(), &[0.0], 1e-4).unwrap();
        assert!((c.masses[0] - (1.0 - (-1f64).exp())).abs() < 1e-8);
    }

    #[test]
    fn translation_mass_matches_closed_form() {
        let rho = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        let phi = Semiflow::translation(1, DomainKind::HalfLine);
        let times = [0.5, 1.0, 3.0, 10.0];
        let c = lp_mass_curve(&rho, &phi, &unit(), &times, 1e-4).unwrap();
        for (t, m) in times.iter().zip(&c.masses) {
            let exact = (-t).exp() * (1.0 - (-1f64).exp());
            assert!((m - exact).abs() < 1e-8 * exact.max(1e-3), "t = {t}");
        }
    }

    #[test]
    fn flat_translation_preserves_mass() {
        let phi = Semiflow::translation(1, DomainKind::HalfLine);
        let c = lp_mass_curve(&WeightFunction::constant(1.0), &phi, &unit(), &lattice_times(7.0, 700.0), 1e-3).unwrap();
        assert!(c.masses.iter().all(|m| (m - 1.0).abs() < 1e-8));
    }

    #[test]
    fn mass_is_additive_over_adjacent_boxes() {
        let rho = WeightFunction::from_shape(WeightShape::PowerDecay { power: 3.0 }, 1.0, 2.0);
        let phi = Semiflow::dilation(1.0);
        let ks = [
            BoxRegion::interval(1.0, 2.0).unwrap(),
            BoxRegion::interval(2.0, 3.5).unwrap(),
            BoxRegion::interval(1.0, 3.5).unwrap(),
        ];
        let times = [0.0, 0.7, 2.0, 5.0];
        let m: Vec<MassCurve> = ks.iter().map(|k| lp_mass_curve(&rho, &phi, k, &times, 1e-3).unwrap()).collect();
        for i in 0..times.len() {
            assert!((m[0].masses[i] + m[1].masses[i] - m[2].masses[i]).abs() < 1e-8);
        }
    }

    #[test]
    fn dilation_mass_matches_antiderivative() {
        let rho = WeightFunction::from_shape(WeightShape::PowerDecay { power: 3.0 }, 1.0, 2.0);
        let phi = Semiflow::dilation(1.0);
        let times = [0.0, 1.0, 4.0];
        let c = lp_mass_curve(&rho, &phi, &BoxRegion::interval(1.0, 2.0).unwrap(), &times, 1e-4).unwrap();
        for (t, m) in times.iter().zip(&c.masses) {
            // Oracle: integral of e^t (1 + x e^t)^{-3} over [1, 2] = [(1+e^t)^{-2} - (1+2e^t)^{-2}] / 2.
            let e = t.exp();
            let exact = ((1.0 + e).powi(-2) - (1.0 + 2.0 * e).powi(-2)) / 2.0;
            assert!((m - exact).abs() < 1e-8 * exact.max(1e-2), "t = {t}");
        }
    }

    #[test]
    fn lp_verdicts() {
        let times = lattice_times(1.0, 1e3);
        let half = Semiflow::translation(1, DomainKind::HalfLine);
        let decay = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        assert!(lp_semiflow_criterion(&decay, &half, &[unit()], &times, 1e-3, TOL_CRIT).unwrap().holds);
        assert!(!lp_semiflow_criterion(&WeightFunction::constant(1.0), &half, &[unit()], &times, 1e-3, TOL_CRIT).unwrap().holds);
        let rho = WeightFunction::from_shape(WeightShape::PowerDecay { power: 3.0 }, 1.0, 2.0);
        let k = BoxRegion::interval(1.0, 2.0).unwrap();
        assert!(lp_semiflow_criterion(&rho, &Semiflow::dilation(1.0), &[k], &times[..60], 1e-3, TOL_CRIT).unwrap().holds);
    }

    #[test]
    fn c0_curves_on_half_line_translation() {
        let d = DomainSpec::half_line(200.0).unwrap();
        let rho = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        let phi = Semiflow::translation(1, DomainKind::HalfLine);
        let c = c0_sup_curves(&rho, &phi, &d, &unit(), &[2.0, 5.0], 1e-3).unwrap();
        assert_eq!(c.s_pre, vec![0.0, 0.0]);
        for (t, s) in [2.0f64, 5.0].iter().zip(&c.s_img) {
            assert!((s - (-t).exp()).abs() < 1e-3 * (-t).exp());
        }
        let times = lattice_times(1.0, 1e3);
        assert!(c0_semiflow_criterion(&rho, &phi, &d, &[unit()], &times, 1e-2, TOL_CRIT).unwrap().holds);
        assert!(
            !c0_semiflow_criterion(&WeightFunction::constant(1.0), &phi, &d, &[unit()], &times, 1e-2, TOL_CRIT).unwrap().holds
        );
    }

    #[test]
    fn c0_curves_on_dilation() {
        let d = DomainSpec::half_line(200.0).unwrap();
        let rho = WeightFunction::from_shape(WeightShape::RationalBump, 1.0, 1.0);
        let phi = Semiflow::dilation(1.0);
        let k = BoxRegion::interval(1.0, 2.0).unwrap();
        let t = 6.0f64;
        let c = c0_sup_curves(&rho, &phi, &d, &k, &[t], 1e-4).unwrap();
        let r = |x: f64| x / (1.0 + x * x);
        assert!((c.s_pre[0] - r(2.0 * (-t).exp())).abs() < 1e-3 * r(2.0 * (-t).exp()));
        assert!((c.s_img[0] - r(t.exp())).abs() < 1e-3 * r(t.exp()));
        assert!(c0_semiflow_criterion(&rho, &phi, &d, &[k], &lattice_times(1.0, 40.0), 1e-3, TOL_CRIT).unwrap().holds);
    }

    #[test]
    fn preimage_scan_fallback_agrees_with_inverse() {
        let d = DomainSpec::line(30.0).unwrap();
        let rho = WeightFunction::from_shape(WeightShape::SymmetricExponential { rate: 1.0 }, 1.0, 1.0);
        let with_inv = Semiflow::translation(1, DomainKind::Line);
        let no_inv = Semiflow::Custom(CustomFlow::new(
            "shift",
            1,
            true,
            |t, x, out| {
                out[0] = x[0] + t;
                true
            },
            |_, _| 1.0,
        ));
        let k = unit();
        let a = c0_sup_curves(&rho, &with_inv, &d, &k, &[3.0, 7.5], 1e-3).unwrap();
        let b = c0_sup_curves(&rho, &no_inv, &d, &k, &[3.0, 7.5], 1e-3).unwrap();
        for i in 0..2 {
            assert!((a.s_pre[i] - b.s_pre[i]).abs() < 2e-3 * a.s_pre[i]);
        }
    }
}
