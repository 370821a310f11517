use rayon::prelude::*;
use serde::Serialize;

use crate::error::{LabError, Result};
use crate::semigroups::{residual, OperatorFamily, TimeDomain};
use crate::spaces::GridFunction;

/// Finest dyadic level the sampler will go to.
pub const MAX_DYADIC_LEVEL: u32 = 12;

/// Dyadic rationals `p / 2^m`, `m <= level`, with `1 < |q| <= horizon`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct DyadicSampler {
    pub horizon: f64,
    pub level: u32,
}

impl DyadicSampler {
    pub fn new(horizon: f64, level: u32) -> Result<Self> {
        if level > MAX_DYADIC_LEVEL {
            return Err(LabError::InvalidParameter(format!("dyadic level {level} exceeds {MAX_DYADIC_LEVEL}")));
        }
        if !(horizon > 1.0 && horizon.is_finite()) {
            return Err(LabError::InvalidParameter(format!("horizon must exceed 1, got {horizon}")));
        }
        Ok(Self { horizon, level })
    }

    /// Sorted by `|q|`, negatives included when `domain` is a group.
    pub fn times(&self, domain: TimeDomain) -> Vec<f64> {
        let denom = (1u64 << self.level) as f64;
        let top = (self.horizon * denom).floor() as u64;
        let mut out = Vec::new();
        for p in (denom as u64 + 1)..=top {
            let q = p as f64 / denom;
            out.push(q);
            if domain == TimeDomain::Group {
                out.push(-q);
            }
        }
        out
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct GDeltaLevel {
    pub k: usize,
    pub min_residual: f64,
    pub argmin: f64,
    pub passes: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct GDeltaReport {
    /// Largest `k` for which some sampled `q` has residual below `1/k`.
    pub member_up_to: usize,
    pub curve: Vec<GDeltaLevel>,
    pub samples: usize,
}

/// Tests `x` against the first `k_max` open sets `U_k = { x : some q with
/// distance(W(q) x, x) < 1/k }`.
pub fn gdelta_membership(
    family: &dyn OperatorFamily,
    x: &GridFunction,
    k_max: usize,
    sampler: DyadicSampler,
) -> Result<GDeltaReport> {
    if k_max == 0 {
        return Err(LabError::InvalidParameter("k_max must be positive".into()));
    }
    let times = sampler.times(family.time_domain());
    let residuals: Vec<f64> = times.par_iter().map(|&q| residual(family, x, q)).collect::<Result<_>>()?;
    let (argmin, min_residual) =
        times.iter().zip(&residuals).fold((f64::NAN, f64::INFINITY), |acc, (&q, &r)| if r < acc.1 { (q, r) } else { acc });
    let curve: Vec<GDeltaLevel> =
        (1..=k_max).map(|k| GDeltaLevel { k, min_residual, argmin, passes: min_residual < 1.0 / k as f64 }).collect();
    let member_up_to = curve.iter().take_while(|l| l.passes).count();
    Ok(GDeltaReport { member_up_to, curve, samples: times.len() })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroups::DiagonalSemigroup;
    use crate::spaces::NormMode;

    #[test]
    fn sampler_counts() {
        let s = DyadicSampler::new(3.0, 2).unwrap();
        let t = s.times(TimeDomain::Forward);
        assert_eq!(t.len(), 8);
        assert_eq!(t[0], 1.25);
        assert_eq!(*t.last().unwrap(), 3.0);
        assert_eq!(s.times(TimeDomain::Group).len(), 16);
        assert!(DyadicSampler::new(3.0, 13).is_err());
    }

    #[test]
    fn periodic_vectors_are_members_at_every_level() {
        let d = DiagonalSemigroup::new(vec![std::f64::consts::TAU], NormMode::Lp(2.0)).unwrap();
        let r = gdelta_membership(&d, &d.state_space().basis(0), 50, DyadicSampler::new(4.0, 3).unwrap()).unwrap();
        assert_eq!(r.member_up_to, 50);
    }

    #[test]
    fn non_returning_vectors_fail_early() {
        // half a turn per unit time: exact returns at even times only
        let d = DiagonalSemigroup::from_cycles(vec![0.5], NormMode::Lp(2.0)).unwrap();
        let r = gdelta_membership(&d, &d.state_space().basis(0), 10, DyadicSampler::new(6.0, 0).unwrap()).unwrap();
        assert_eq!(r.member_up_to, 10);
        let r = gdelta_membership(&d, &d.state_space().basis(0), 10, DyadicSampler::new(1.9, 1).unwrap()).unwrap();
        // only q = 1.5: |e^{i 1.5 pi} - 1| = sqrt 2
        assert_eq!(r.member_up_to, 0);
        assert!((r.curve[0].min_residual - 2f64.sqrt()).abs() < 1e-12);
    }
}
