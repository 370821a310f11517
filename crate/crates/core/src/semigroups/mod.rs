//! Semiflows and the operator families they induce.

pub mod composition;
pub mod diagonal;
pub mod direct_sum;
pub mod discretized;
pub mod family;
pub mod matrix;
pub mod rotated;
pub mod semiflow;

pub use composition::{compose_apply, translate_apply, CompositionFamily};
pub use diagonal::DiagonalSemigroup;
pub use direct_sum::{direct_sum, DirectSum};
pub use discretized::{time_discretize, DiscreteOperator, Iterate, IteratePath};
pub use family::{residual, residual_flagged, Applied, OperatorFamily, SharedFamily, TimeDomain};
pub use matrix::{
    assemble_matrix, operator_norm_bounds, operator_norm_estimate, spectral_radius_estimate, NormBounds, NormMethod,
    OperatorMatrix, SpectralEstimate, DEFAULT_MATRIX_CAP,
};
pub use rotated::{rotate_family, rotate_operator, RationalRotation, RotatedFamily, RotatedOperator};
pub use semiflow::{semiflow_selfcheck, CustomFlow, SelfCheckReport, Semiflow};
