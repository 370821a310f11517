//! Weights, grids, discretized weighted norms and admissibility checks.

pub mod admissibility;
pub mod domain;
pub mod grid;
pub mod state;
pub mod weight;

pub use state::StateSpace;

pub use admissibility::{
    check_c0_semiflow_admissible, check_c0_with_ladder, check_condition_d, check_lp_semiflow_admissible, check_weight_admissible,
    domain_samples, lattice_1d, AdmissibilityCertificate, CertificateKind,
};
pub use domain::{BoxRegion, DomainKind, DomainSpec, DEFAULT_TRUNC};
pub use grid::{distance, norm, Axis, GridFunction, NormMode, SpaceId, Stencil, WeightedGridSpace, MAX_DIM};
pub use weight::{WeightFunction, WeightShape};
