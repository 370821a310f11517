//! Weighted function spaces, composition semigroups and numerical recurrence
//! detection.

// Parameter checks are written `!(x > 0.0)` on purpose so that NaN is rejected.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod criteria;
pub mod error;
pub mod recurrence;
pub mod semigroups;
pub mod spaces;

pub use error::{LabError, Result};
