//! Closed-form recurrence criteria, evaluated on samples, and their
//! cross-validation against the detectors.

pub mod jacobian;
pub mod semiflow;
pub mod spectrum;
pub mod translation;
pub mod verdict;

pub use jacobian::{jacobian_hypotheses, weighted_jacobian_criterion_c0, weighted_jacobian_criterion_lp};
pub use semiflow::{c0_semiflow_criterion, c0_sup_curves, lp_mass_curve, lp_semiflow_criterion, MassCurve, SupCurves};
pub use spectrum::discrete_spectrum_criterion;
pub use translation::{liminf_criterion_halfline, pointwise_decay_criterion_line, two_sided_decay_criterion_line};
pub use verdict::{
    cross_validate, dips_below, Consistency, ConsistencyRecord, CriterionKind, CriterionVerdict, Evidence, CRIT_HORIZON, TOL_CRIT,
};
