use serde::Serialize;

use super::domain::{BoxRegion, DomainSpec};
use super::weight::WeightFunction;
use crate::error::{LabError, Result};
use crate::semigroups::Semiflow;

/// Relative slack allowed on every defining inequality.
pub const ADMISSIBILITY_TOL: f64 = 1e-9;

/// Weight levels `delta` at which the compactness surrogate is checked.
pub const DEFAULT_DELTA_LADDER: [f64; 3] = [0.5, 0.25, 0.1];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CertificateKind {
    ScalarWeight,
    LpSemiflow,
    C0Semiflow,
    ConditionD,
}

/// Result of a sampled admissibility check. The inequalities are only
/// certified on the sample lattice that was supplied.
#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityCertificate {
    pub kind: CertificateKind,
    pub holds: bool,
    pub worst_ratio: f64,
    pub witness_point: Option<Vec<f64>>,
    pub witness_time: Option<f64>,
    pub m_used: f64,
    pub omega_used: f64,
    pub samples_checked: usize,
    /// Samples dropped because a shifted point left the truncated domain.
    pub samples_skipped: usize,
    /// For condition (D): the first sampled time after which all images miss every compact.
    pub threshold_time: Option<f64>,
    pub note: String,
}

impl AdmissibilityCertificate {
    fn finish(
        kind: CertificateKind,
        worst_ratio: f64,
        witness: Option<(Vec<f64>, f64)>,
        m: f64,
        omega: f64,
        checked: usize,
        skipped: usize,
    ) -> Self {
        let holds = worst_ratio <= 1.0 + ADMISSIBILITY_TOL;
        let (witness_point, witness_time) = match (holds, witness) {
            (false, Some((x, t))) => (Some(x), Some(t)),
            _ => (None, None),
        };
        Self {
            kind,
            holds,
            worst_ratio,
            witness_point,
            witness_time,
            m_used: m,
            omega_used: omega,
            samples_checked: checked,
            samples_skipped: skipped,
            threshold_time: None,
            note: format!("certified on {checked} sampled pairs only"),
        }
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Tracks the largest log-ratio and where it occurred.
struct Worst {
    ln: f64,
    at: Option<(Vec<f64>, f64)>,
}

impl Worst {
    fn new() -> Self {
        Self { ln: f64::NEG_INFINITY, at: None }
    }

    fn offer(&mut self, ln: f64, x: &[f64], t: f64) {
        if ln > self.ln || self.at.is_none() {
            self.ln = self.ln.max(ln);
            self.at = Some((x.to_vec(), t));
        }
    }

    fn ratio(&self) -> f64 {
        if self.ln == f64::NEG_INFINITY {
            0.0
        } else {
            self.ln.exp()
        }
    }
}

/// Checks `rho(t) <= M e^{omega |t'|} rho(t + t')` on all sampled pairs whose
/// shifted point stays inside the truncated domain.
pub fn check_weight_admissible(
    rho: &WeightFunction,
    domain: &DomainSpec,
    t_samples: &[Vec<f64>],
    shift_samples: &[Vec<f64>],
) -> Result<AdmissibilityCertificate> {
    if rho.m <= 0.0 {
        return Err(LabError::InvalidParameter(format!("M must be positive, got {}", rho.m)));
    }
    let ln_m = rho.m.ln();
    let mut worst = Worst::new();
    let (mut checked, mut skipped) = (0, 0);
    let mut shifted = vec![0.0; domain.dim()];
    for t in t_samples {
        let ln_t = rho.ln_eval_checked(t)?;
        for s in shift_samples {
            for ((o, a), b) in shifted.iter_mut().zip(t).zip(s) {
                *o = a + b;
            }
            if !(domain.contains(&shifted) && domain.in_window(&shifted)) {
                skipped += 1;
                continue;
            }
            let ln_ts = rho.ln_eval_checked(&shifted)?;
            checked += 1;
            worst.offer(ln_t - ln_m - rho.omega * norm(s) - ln_ts, t, norm(s) * s.first().copied().unwrap_or(0.0).signum());
        }
    }
    Ok(AdmissibilityCertificate::finish(
        CertificateKind::ScalarWeight,
        worst.ratio(),
        worst.at,
        rho.m,
        rho.omega,
        checked,
        skipped,
    ))
}

/// Checks `rho1(x) <= M e^{omega |t|} rho1(phi(t,x)) |det D phi(t,x)|` on samples.
/// A vanishing Jacobian counts as a violation.
pub fn check_lp_semiflow_admissible(
    rho1: &WeightFunction,
    phi: &Semiflow,
    t_samples: &[f64],
    x_samples: &[Vec<f64>],
    m: f64,
    omega: f64,
) -> Result<AdmissibilityCertificate> {
    if m <= 0.0 {
        return Err(LabError::InvalidParameter(format!("M must be positive, got {m}")));
    }
    let ln_m = m.ln();
    let mut worst = Worst::new();
    let mut checked = 0;
    let mut y = vec![0.0; phi.dim()];
    for x in x_samples {
        let ln_x = rho1.ln_eval_checked(x)?;
        for &t in t_samples {
            if !phi.map(t, x, &mut y) {
                return Err(LabError::SemiflowDomain { label: phi.label(), t, point: x.clone() });
            }
            checked += 1;
            let det = phi.jac_det(t, x).abs();
            if !(det > 0.0) {
                worst.offer(f64::INFINITY, x, t);
                continue;
            }
            let ln_y = rho1.ln_eval_checked(&y)?;
            worst.offer(ln_x - ln_m - omega * t.abs() - ln_y - det.ln(), x, t);
        }
    }
    Ok(AdmissibilityCertificate::finish(CertificateKind::LpSemiflow, worst.ratio(), worst.at, m, omega, checked, 0))
}

/// Condition (i) `rho(x) <= M e^{omega|t|} rho(phi(t,x))` together with the
/// compactness surrogate for (ii): for every compact `K`, level `delta` and
/// sampled `t`, the sampled set `{x : phi(t,x) in K, rho(x) >= delta}` must sit in
/// a box keeping a margin of at least `2h` from every artificial or open edge
/// of the truncated domain.
#[allow(clippy::too_many_arguments)]
pub fn check_c0_semiflow_admissible(
    rho: &WeightFunction,
    phi: &Semiflow,
    domain: &DomainSpec,
    t_samples: &[f64],
    x_samples: &[Vec<f64>],
    compacts: &[BoxRegion],
    m: f64,
    omega: f64,
    h: f64,
) -> Result<AdmissibilityCertificate> {
    check_c0_with_ladder(rho, phi, domain, t_samples, x_samples, compacts, m, omega, h, &DEFAULT_DELTA_LADDER)
}

#[allow(clippy::too_many_arguments)]
pub fn check_c0_with_ladder(
    rho: &WeightFunction,
    phi: &Semiflow,
    domain: &DomainSpec,
    t_samples: &[f64],
    x_samples: &[Vec<f64>],
    compacts: &[BoxRegion],
    m: f64,
    omega: f64,
    h: f64,
    delta_ladder: &[f64],
) -> Result<AdmissibilityCertificate> {
    if m <= 0.0 {
        return Err(LabError::InvalidParameter(format!("M must be positive, got {m}")));
    }
    for k in compacts {
        if k.dim() != domain.dim() || !domain.contains(&k.low) || !domain.contains(&k.high) {
            return Err(LabError::Precondition(format!("compact {k:?} is not inside the domain")));
        }
    }
    let ln_m = m.ln();
    let mut worst = Worst::new();
    let mut checked = 0;
    let ln_rho: Vec<f64> = x_samples.iter().map(|x| rho.ln_eval_checked(x)).collect::<Result<_>>()?;
    let mut images = vec![vec![0.0; phi.dim()]; x_samples.len()];
    for &t in t_samples {
        for (i, x) in x_samples.iter().enumerate() {
            if !phi.map(t, x, &mut images[i]) {
                return Err(LabError::SemiflowDomain { label: phi.label(), t, point: x.clone() });
            }
            checked += 1;
            let ln_y = rho.ln_eval_checked(&images[i])?;
            worst.offer(ln_rho[i] - ln_m - omega * t.abs() - ln_y, x, t);
        }
        // Compactness surrogate: the ratio 2h / margin must stay <= 1.
        for k in compacts {
            for &delta in delta_ladder {
                let ln_delta = delta.ln();
                for (i, x) in x_samples.iter().enumerate() {
                    if ln_rho[i] < ln_delta || !k.contains(&images[i]) {
                        continue;
                    }
                    let margin = edge_margin(domain, x);
                    let ratio = if margin > 0.0 { 2.0 * h / margin } else { f64::INFINITY };
                    worst.offer(ratio.ln(), x, t);
                }
            }
        }
    }
    Ok(AdmissibilityCertificate::finish(CertificateKind::C0Semiflow, worst.ratio(), worst.at, m, omega, checked, 0))
}

/// Distance from `x` to the nearest window edge that is not a closed boundary of the domain.
fn edge_margin(domain: &DomainSpec, x: &[f64]) -> f64 {
    let mut margin = f64::INFINITY;
    for (a, v) in x.iter().enumerate() {
        let (l, h) = domain.window_axis(a);
        if domain.edge_needs_margin(a, false) {
            margin = margin.min(v - l);
        }
        if domain.edge_needs_margin(a, true) {
            margin = margin.min(h - v);
        }
    }
    margin
}

/// Condition (D): for each compact there is a sampled `t0` after which no
/// sampled forward image meets it. `worst_ratio = max_K t0 / t_max`.
pub fn check_condition_d(
    phi: &Semiflow,
    compacts: &[BoxRegion],
    t_samples: &[f64],
    x_samples: &[Vec<f64>],
) -> Result<AdmissibilityCertificate> {
    let mut ts = t_samples.to_vec();
    ts.sort_by(f64::total_cmp);
    let t_max = ts.last().copied().unwrap_or(0.0);
    if !(t_max > 0.0) {
        return Err(LabError::InvalidParameter("condition (D) needs a positive t_max".into()));
    }
    let mut y = vec![0.0; phi.dim()];
    let mut worst_t0: f64 = 0.0;
    let mut witness = None;
    let mut checked = 0;
    for k in compacts {
        // Latest sampled time at which some image meets K.
        let mut last_hit: Option<(f64, Vec<f64>)> = None;
        for &t in ts.iter().rev() {
            let hit = x_samples.iter().find(|x| {
                checked += 1;
                phi.map(t, x, &mut y) && k.contains(&y)
            });
            if let Some(x) = hit {
                last_hit = Some((t, x.clone()));
                break;
            }
        }
        let t0 = match &last_hit {
            None => ts[0],
            Some((t, _)) => match ts.iter().find(|s| **s > *t) {
                Some(s) => *s,
                None => f64::INFINITY,
            },
        };
        if t0 > worst_t0 || witness.is_none() {
            worst_t0 = worst_t0.max(t0);
            witness = last_hit.map(|(t, x)| (x, t));
        }
    }
    let ratio = worst_t0 / t_max;
    let mut cert = AdmissibilityCertificate::finish(CertificateKind::ConditionD, ratio, witness, 1.0, 0.0, checked, 0);
    if cert.holds {
        cert.threshold_time = Some(worst_t0);
    }
    Ok(cert)
}

/// Window edges plus `n` interior points per axis of the truncated domain.
pub fn domain_samples(domain: &DomainSpec, n: usize) -> Vec<Vec<f64>> {
    let axes: Vec<Vec<f64>> = (0..domain.dim())
        .map(|a| {
            let (l, h) = domain.window_axis(a);
            let mut v: Vec<f64> = (0..n).map(|i| l + (i as f64 + 0.5) * (h - l) / n as f64).collect();
            v.insert(0, l);
            v.push(h);
            v
        })
        .collect();
    let mut out = vec![Vec::new()];
    for axis in &axes {
        out = out
            .into_iter()
            .flat_map(|prefix: Vec<f64>| {
                axis.iter().map(move |&v| {
                    let mut p = prefix.clone();
                    p.push(v);
                    p
                })
            })
            .collect();
    }
    out.retain(|x| domain.contains(x));
    out
}

/// `[start, start + step, ..., <= end]` as one-dimensional points.
pub fn lattice_1d(start: f64, end: f64, step: f64) -> Vec<Vec<f64>> {
    let n = ((end - start) / step).floor() as usize;
    (0..=n).map(|i| vec![start + i as f64 * step]).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::{DomainKind, WeightShape};
    use proptest::prelude::*;

    fn shifts() -> Vec<Vec<f64>> {
        (-20..=20).map(|i| vec![0.5 * i as f64]).collect()
    }

    #[test]
    fn exponential_weights_are_admissible() {
        let d = DomainSpec::half_line(50.0).unwrap();
        let pts = lattice_1d(0.0, 40.0, 0.5);
        for rate in [-1.0, 1.0] {
            let w = WeightFunction::from_shape(WeightShape::Exponential { rate }, 1.0, 1.0);
            let c = check_weight_admissible(&w, &d, &pts, &shifts()).unwrap();
            assert!(c.holds, "rate {rate}: {c:?}");
            assert!(c.witness_point.is_none() && c.witness_time.is_none());
        }
    }

    #[test]
    fn gaussian_weight_defeats_exponential_bounds() {
        let d = DomainSpec::half_line(60.0).unwrap();
        let w = WeightFunction::from_shape(WeightShape::Gaussian { a: 1.0 }, 10.0, 3.0);
        let c = check_weight_admissible(&w, &d, &lattice_1d(0.0, 40.0, 1.0), &[vec![1.0]]).unwrap();
        assert!(!c.holds);
        // ratio at (t, 1) is e^{2t + 1 - omega} / M, largest at t = 40.
        let expect = (2.0 * 40.0 + 1.0 - 3.0f64).exp() / 10.0;
        assert!((c.worst_ratio / expect - 1.0).abs() < 1e-9);
        assert_eq!(c.witness_point, Some(vec![40.0]));
    }

    #[test]
    fn non_positive_weight_sample_is_an_error() {
        let d = DomainSpec::half_line(5.0).unwrap();
        let w = WeightFunction::from_shape(WeightShape::RationalBump, 1.0, 1.0);
        let r = check_weight_admissible(&w, &d, &[vec![0.0]], &[vec![1.0]]);
        assert!(matches!(r, Err(LabError::InvalidWeight { .. })));
    }

    #[test]
    fn lp_semiflow_cases() {
        let xs = lattice_1d(0.0, 30.0, 0.25);
        let ts: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let tr = Semiflow::translation(1, DomainKind::HalfLine);
        let w = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        assert!(check_lp_semiflow_admissible(&w, &tr, &ts, &xs, 1.0, 1.0).unwrap().holds);

        let flat = WeightFunction::constant(1.0);
        let c = check_lp_semiflow_admissible(&flat, &tr, &ts, &xs, 1.0, 0.0).unwrap();
        assert!(c.holds);
        assert_eq!(c.worst_ratio, 1.0);

        let dil = Semiflow::dilation(1.0);
        let pos: Vec<Vec<f64>> = (1..=200).map(|i| vec![0.05 * i as f64]).collect();
        let sym: Vec<f64> = (-20..=20).map(|i| 0.25 * i as f64).collect();
        let w2 = WeightFunction::from_shape(WeightShape::PowerDecay { power: 2.0 }, 1.0, 3.0);
        let c = check_lp_semiflow_admissible(&w2, &dil, &sym, &pos, 1.0, 3.0).unwrap();
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn singular_jacobian_is_a_violation() {
        let phi = Semiflow::Custom(crate::semigroups::CustomFlow::new(
            "collapse",
            1,
            false,
            |_, x, o| {
                o[0] = x[0];
                true
            },
            |t, _| if t > 0.0 { 0.0 } else { 1.0 },
        ));
        let c = check_lp_semiflow_admissible(&WeightFunction::constant(1.0), &phi, &[0.0, 1.0], &[vec![1.0]], 1.0, 0.0).unwrap();
        assert!(!c.holds);
        assert_eq!(c.witness_time, Some(1.0));
    }

    #[test]
    fn c0_translation_cases() {
        let d = DomainSpec::half_line(100.0).unwrap();
        let xs = lattice_1d(0.0, 100.0, 0.1);
        let ts: Vec<f64> = (0..=50).map(|i| i as f64).collect();
        let k = [BoxRegion::interval(0.0, 1.0).unwrap()];
        let w = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        let c =
            check_c0_semiflow_admissible(&w, &Semiflow::translation(1, DomainKind::HalfLine), &d, &ts, &xs, &k, 1.0, 1.0, 0.1)
                .unwrap();
        assert!(c.holds, "{c:?}");

        let line = DomainSpec::line(100.0).unwrap();
        let xs = lattice_1d(-100.0, 100.0, 0.1);
        let c = check_c0_with_ladder(
            &WeightFunction::constant(1.0),
            &Semiflow::translation(1, DomainKind::Line),
            &line,
            &ts,
            &xs,
            &k,
            1.0,
            0.0,
            0.1,
            &[0.5],
        )
        .unwrap();
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn c0_dilation_holds_at_desk_scale() {
        let d = DomainSpec::open_box(vec![(0.0, f64::INFINITY)], 1000.0).unwrap();
        let xs: Vec<Vec<f64>> = (0..20000).map(|i| vec![0.05 * (i as f64 + 0.5)]).collect();
        let ts: Vec<f64> = (-10..=10).map(|i| 0.5 * i as f64).collect();
        let w = WeightFunction::from_shape(WeightShape::RationalBump, 1.0, 1.0);
        let k = [BoxRegion::interval(1.0, 2.0).unwrap()];
        let c = check_c0_semiflow_admissible(&w, &Semiflow::dilation(1.0), &d, &ts, &xs, &k, 1.0, 1.0, 0.05).unwrap();
        assert!(c.holds, "{c:?}");
    }

    #[test]
    fn condition_d_cases() {
        let k = [BoxRegion::interval(0.0, 1.0).unwrap()];
        let ts: Vec<f64> = (0..=40).map(|i| 0.25 * i as f64).collect();
        let half = domain_samples(&DomainSpec::half_line(50.0).unwrap(), 500);
        let c = check_condition_d(&Semiflow::translation(1, DomainKind::HalfLine), &k, &ts, &half).unwrap();
        assert!(c.holds);
        assert_eq!(c.threshold_time, Some(1.25));

        let line = domain_samples(&DomainSpec::line(50.0).unwrap(), 1000);
        let c = check_condition_d(&Semiflow::translation(1, DomainKind::Line), &k, &ts, &line).unwrap();
        assert!(!c.holds);
        assert!(c.witness_point.is_some());

        // Left edge of the truncated window is x_min = 0.05; images miss [1, 2] once 0.05 e^t > 2.
        let xs: Vec<Vec<f64>> = (1..=2000).map(|i| vec![0.05 * i as f64]).collect();
        let k2 = [BoxRegion::interval(1.0, 2.0).unwrap()];
        let dil = Semiflow::dilation(1.0);
        let c = check_condition_d(&dil, &k2, &ts, &xs).unwrap();
        assert!(c.holds);
        let t0 = c.threshold_time.unwrap();
        assert!(0.05 * t0.exp() > 2.0 && 0.05 * (t0 - 0.25).exp() <= 2.0);
        let short: Vec<f64> = ts.iter().copied().filter(|t| *t <= 3.0).collect();
        assert!(!check_condition_d(&dil, &k2, &short, &xs).unwrap().holds);
    }

    proptest! {
        #[test]
        fn certificates_are_monotone_in_m(rate in -2.0f64..2.0, omega in 0.0f64..3.0, m in 1.0f64..5.0, extra in 0.0f64..5.0) {
            let d = DomainSpec::half_line(30.0).unwrap();
            let pts = lattice_1d(0.0, 20.0, 1.0);
            let w = WeightFunction::from_shape(WeightShape::Exponential { rate }, m, omega);
            let a = check_weight_admissible(&w, &d, &pts, &shifts()).unwrap();
            let b = check_weight_admissible(&w.clone().with_claim(m + extra, omega), &d, &pts, &shifts()).unwrap();
            prop_assert!(b.worst_ratio <= a.worst_ratio * (1.0 + 1e-12));
            if a.holds { prop_assert!(b.holds); }
        }
    }
}
