use rayon::prelude::*;

use super::verdict::{dips_below, CriterionKind, CriterionVerdict, Evidence};
use crate::error::{LabError, Result};
use crate::recurrence::Direction;
use crate::semigroups::Semiflow;
use crate::spaces::{AdmissibilityCertificate, CertificateKind, WeightFunction};

/// `(phi(-t, x), det D phi(-t, x))`, through the inverse on the image when
/// the flow only runs forward. `None` when `x` is not in `phi(t, Omega)`.
fn backward(phi: &Semiflow, t: f64, x: &[f64]) -> Option<(Vec<f64>, f64)> {
    if phi.group_like() {
        let y = phi.map_vec(-t, x)?;
        let det = phi.jac_det(-t, x);
        Some((y, det))
    } else {
        let y = phi.inverse_vec(t, x)?;
        let det = 1.0 / phi.jac_det(t, &y);
        Some((y, det))
    }
}

fn ln_quantity(rho: &WeightFunction, phi: &Semiflow, t: f64, x: &[f64], with_jacobian: bool) -> Option<f64> {
    let (y, det) = backward(phi, t, x)?;
    if !phi.in_domain(&y) {
        return None;
    }
    let jac = if with_jacobian { det.abs().ln() } else { 0.0 };
    Some(rho.ln_eval(&y) + jac)
}

/// Sampled `sup` and `inf` over `y in K`, `t in J` of
/// `rho(phi(t,y)) J(t,y) / (rho(y) rho(phi(t,x)) J(t,x))`, with `J` the
/// Jacobian factor or 1.
pub fn jacobian_hypotheses(
    rho: &WeightFunction,
    phi: &Semiflow,
    k_samples: &[Vec<f64>],
    x: &[f64],
    j_samples: &[f64],
    with_jacobian: bool,
) -> (f64, f64) {
    let term = |t: f64, z: &[f64]| -> Option<f64> {
        let y = phi.map_vec(t, z)?;
        let jac = if with_jacobian { phi.jac_det(t, z).abs().ln() } else { 0.0 };
        Some(rho.ln_eval(&y) + jac)
    };
    let mut sup = f64::NEG_INFINITY;
    let mut inf = f64::INFINITY;
    for &t in j_samples {
        let Some(base) = term(t, x) else { continue };
        for y in k_samples {
            if let Some(v) = term(t, y) {
                let r = v - rho.ln_eval(y) - base;
                sup = sup.max(r);
                inf = inf.min(r);
            }
        }
    }
    (sup.exp(), inf.exp())
}

fn precheck(phi: &Semiflow, condition_d: Option<&AdmissibilityCertificate>) -> Result<&'static str> {
    if phi.group_like() {
        return Ok("surjective time-t maps (J = R)");
    }
    match condition_d {
        Some(c) if c.kind == CertificateKind::ConditionD && c.holds => {}
        _ => return Err(LabError::Precondition("flow is not a group and condition (D) is not certified".into())),
    }
    if !phi.has_inverse() {
        return Err(LabError::CriterionUnavailable("inverse-time flow unavailable".into()));
    }
    Ok("condition (D) (J = [0, inf))")
}

#[allow(clippy::too_many_arguments)]
fn weighted_jacobian(
    kind: CriterionKind,
    rho: &WeightFunction,
    phi: &Semiflow,
    x_samples: &[Vec<f64>],
    time_grid: &[f64],
    tol: f64,
    condition_d: Option<&AdmissibilityCertificate>,
    with_jacobian: bool,
) -> Result<CriterionVerdict> {
    let case = precheck(phi, condition_d)?;
    if x_samples.is_empty() {
        return Err(LabError::InvalidParameter("no sample points".into()));
    }
    let per_point: Vec<(bool, f64, usize)> = x_samples
        .par_iter()
        .map(|x| {
            let mut skipped = 0;
            let mut curve = Vec::with_capacity(time_grid.len());
            for &t in time_grid {
                match ln_quantity(rho, phi, t, x, with_jacobian) {
                    Some(v) => curve.push((t, v.exp())),
                    None => skipped += 1,
                }
            }
            let min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            (dips_below(&curve, tol), min, skipped)
        })
        .collect();
    let holds = per_point.iter().all(|p| p.0);
    let skipped: usize = per_point.iter().map(|p| p.2).sum();

    let j: Vec<f64> = if phi.group_like() {
        time_grid.iter().flat_map(|&t| [t, -t]).chain(std::iter::once(0.0)).collect()
    } else {
        std::iter::once(0.0).chain(time_grid.iter().copied()).collect()
    };
    let anchor = x_samples.iter().max_by(|a, b| a[0].total_cmp(&b[0])).unwrap();
    let (sup, inf) = jacobian_hypotheses(rho, phi, x_samples, anchor, &j, with_jacobian);

    let mut notes = vec![
        format!("case: {case}"),
        format!("sampled hypothesis sup = {sup:e}, inf = {inf:e} over the sample points and time lattice"),
    ];
    if skipped > 0 {
        notes.push(format!("{skipped} (t, x) pairs outside phi(t, Omega) skipped"));
    }
    if !with_jacobian {
        notes.push("limit target of rho(phi(-t, x)) taken as 0".into());
    }
    let quantity = if with_jacobian { "rho(phi(-t,x)) det" } else { "rho(phi(-t,x))" };
    Ok(CriterionVerdict {
        criterion: kind,
        holds,
        evidence: x_samples.iter().zip(&per_point).map(|(x, p)| Evidence::new(format!("min {quantity}"), x[0], p.1)).collect(),
        horizon: time_grid.iter().fold(0.0, |a: f64, t| a.max(t.abs())),
        tol,
        direction: Some(Direction::Backward),
        notes,
    })
}

/// For every sampled `x`, `rho(phi(-t, x)) |det D phi(-t, x)|` dips below `tol`.
pub fn weighted_jacobian_criterion_lp(
    rho: &WeightFunction,
    phi: &Semiflow,
    x_samples: &[Vec<f64>],
    time_grid: &[f64],
    tol: f64,
    condition_d: Option<&AdmissibilityCertificate>,
) -> Result<CriterionVerdict> {
    weighted_jacobian(CriterionKind::WeightedJacobianLp, rho, phi, x_samples, time_grid, tol, condition_d, true)
}

/// For every sampled `x`, `rho(phi(-t, x))` dips below `tol`.
pub fn weighted_jacobian_criterion_c0(
    rho: &WeightFunction,
    phi: &Semiflow,
    x_samples: &[Vec<f64>],
    time_grid: &[f64],
    tol: f64,
    condition_d: Option<&AdmissibilityCertificate>,
) -> Result<CriterionVerdict> {
    weighted_jacobian(CriterionKind::WeightedJacobianC0, rho, phi, x_samples, time_grid, tol, condition_d, false)
}
