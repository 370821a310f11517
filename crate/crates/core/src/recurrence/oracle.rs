use serde::Serialize;

use crate::error::{LabError, Result};
use crate::semigroups::OperatorFamily;
use crate::spaces::GridFunction;

/// `g = center + P_t center`, with `distance(g, center) < eps` and
/// `distance(W(t) g, center) < eps`.
#[derive(Debug, Clone)]
pub struct TransitivityWitness {
    pub t: f64,
    pub g: GridFunction,
    pub in_ball_residual: f64,
    pub return_residual: f64,
}

#[derive(Debug, Clone)]
pub enum ProbeOutcome {
    Accepted(TransitivityWitness),
    /// `return_residual` is only computed when the in-ball test passes.
    Rejected {
        in_ball_residual: f64,
        return_residual: Option<f64>,
    },
    /// The tooth or its image left the truncated window.
    OutOfWindow,
}

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
pub enum ProbeKind {
    Accepted,
    Rejected,
    OutOfWindow,
}

impl ProbeOutcome {
    pub fn kind(&self) -> ProbeKind {
        match self {
            ProbeOutcome::Accepted(_) => ProbeKind::Accepted,
            ProbeOutcome::Rejected { .. } => ProbeKind::Rejected,
            ProbeOutcome::OutOfWindow => ProbeKind::OutOfWindow,
        }
    }
}

/// Tries the single candidate `center + P_t center` at time `t`.
pub fn pullback_probe(family: &dyn OperatorFamily, center: &GridFunction, eps: f64, t: f64) -> Result<ProbeOutcome> {
    if !family.has_pullback() {
        return Err(LabError::OracleUnavailable(format!("{} has no pullback", family.description())));
    }
    if !(eps > 0.0) {
        return Err(LabError::InvalidParameter(format!("eps must be positive, got {eps}")));
    }
    let space = family.state_space();
    let tooth = family.pullback(t, center)?;
    if tooth.truncated {
        return Ok(ProbeOutcome::OutOfWindow);
    }
    let g = center.try_add(&tooth.value)?;
    let in_ball = space.distance(&g, center)?;
    if !(in_ball < eps) {
        return Ok(ProbeOutcome::Rejected { in_ball_residual: in_ball, return_residual: None });
    }
    let image = family.apply(t, &g)?;
    if image.truncated {
        return Ok(ProbeOutcome::OutOfWindow);
    }
    let back = space.distance(&image.value, center)?;
    if back < eps {
        Ok(ProbeOutcome::Accepted(TransitivityWitness { t, g, in_ball_residual: in_ball, return_residual: back }))
    } else {
        Ok(ProbeOutcome::Rejected { in_ball_residual: in_ball, return_residual: Some(back) })
    }
}

/// `Some(witness)` when the pullback candidate at `t` lands in both balls.
pub fn pullback_witness_oracle(
    family: &dyn OperatorFamily,
    center: &GridFunction,
    eps: f64,
    t: f64,
) -> Result<Option<TransitivityWitness>> {
    Ok(match pullback_probe(family, center, eps, t)? {
        ProbeOutcome::Accepted(w) => Some(w),
        _ => None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroups::{CompositionFamily, DiagonalSemigroup, Semiflow};
    use crate::spaces::{BoxRegion, DomainSpec, NormMode, WeightFunction, WeightShape, WeightedGridSpace};
    use std::sync::Arc;

    fn half_line(weight: WeightFunction) -> Arc<WeightedGridSpace> {
        Arc::new(WeightedGridSpace::new(DomainSpec::half_line(40.0).unwrap(), &[4000], NormMode::Lp(1.0), weight).unwrap())
    }

    #[test]
    fn decaying_weight_accepts_far_teeth() {
        let s = half_line(WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0));
        let fam = CompositionFamily::translation(s.clone()).unwrap();
        let f = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let w = pullback_witness_oracle(&fam, &f, 0.1, 10.0).unwrap().expect("witness");
        // Oracle: closed-form integral of e^{-x} over [10, 11]; midpoint error is h^2/24 relative.
        let exact = (-10f64).exp() * (1.0 - (-1f64).exp());
        assert!((w.in_ball_residual - exact).abs() < 1e-5 * exact);
        assert_eq!(w.return_residual, 0.0);
        assert!(s.distance(&fam.apply(10.0, &w.g).unwrap().value, &f).unwrap() < 0.1);
    }

    #[test]
    fn flat_weight_never_accepts() {
        let s = half_line(WeightFunction::constant(1.0));
        let fam = CompositionFamily::translation(s.clone()).unwrap();
        let f = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        for t in [1.5, 3.0, 10.0, 25.0] {
            assert!(pullback_witness_oracle(&fam, &f, 0.1, t).unwrap().is_none());
        }
    }

    #[test]
    fn dilation_sup_norm_accepts() {
        let s = Arc::new(
            WeightedGridSpace::new(
                DomainSpec::half_line(200.0).unwrap(),
                &[8000],
                NormMode::C0Sup,
                WeightFunction::from_ln_fn("x/(1+x^2)", 1.0, 1.0, |x| x[0].ln() - (1.0 + x[0] * x[0]).ln()),
            )
            .unwrap(),
        );
        let fam = CompositionFamily::new(s.clone(), Semiflow::dilation(1.0)).unwrap();
        let f =
            s.from_real_fn(
                |x| if (1.0..=2.0).contains(&x[0]) { (std::f64::consts::PI * (x[0] - 1.0)).sin().powi(2) } else { 0.0 },
            );
        let w = pullback_witness_oracle(&fam, &f, 0.1, 4.0).unwrap().expect("witness");
        assert!(w.in_ball_residual < 0.1 && w.return_residual < 0.1);
    }

    #[test]
    fn teeth_beyond_the_window_are_reported() {
        let s = half_line(WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0));
        let fam = CompositionFamily::translation(s.clone()).unwrap();
        let f = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        assert_eq!(pullback_probe(&fam, &f, 0.1, 39.5).unwrap().kind(), ProbeKind::OutOfWindow);
    }

    #[test]
    fn families_without_pullback_are_unavailable() {
        let d = DiagonalSemigroup::new(vec![1.0], NormMode::Lp(2.0)).unwrap();
        let f = d.state_space().basis(0);
        assert!(matches!(pullback_witness_oracle(&d, &f, 0.1, 2.0), Err(LabError::OracleUnavailable(_))));
    }
}
