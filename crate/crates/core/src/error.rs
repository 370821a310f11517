use thiserror::Error;

use crate::recurrence::Stage;

/// Errors raised by the laboratory.
#[derive(Debug, Error)]
pub enum LabError {
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("space mismatch: function belongs to space {found:016x}, expected {expected:016x}")]
    SpaceMismatch { expected: u64, found: u64 },

    #[error("invalid domain: {0}")]
    InvalidDomain(String),

    #[error("invalid weight {label}: sample {value} at {point:?} is not a positive finite number")]
    InvalidWeight { label: String, point: Vec<f64>, value: f64 },

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite entry at index {0}")]
    NonFinite(usize),

    #[error("time {t} is outside the family's time domain ({domain})")]
    InvalidTime { t: f64, domain: &'static str },

    #[error("rotation must be unimodular, |lambda| = {0}")]
    InvalidRotation(f64),

    #[error("semiflow {label} is undefined at t = {t}, x = {point:?}")]
    SemiflowDomain { label: String, t: f64, point: Vec<f64> },

    #[error("matrix size {size} exceeds the configured cap {cap}")]
    SizeCapExceeded { size: usize, cap: usize },

    #[error("numeric failure: {0}")]
    Numeric(String),

    #[error("recurrence oracle unavailable: {0}")]
    OracleUnavailable(String),

    #[error("construction stalled at stage {stage} after {attempts} oracle attempts (truncation limited: {truncation_limited})")]
    ConstructionStalled { stage: usize, attempts: usize, truncation_limited: bool, partial: Vec<Stage> },

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("criterion unavailable: {0}")]
    CriterionUnavailable(String),
}

pub type Result<T, E = LabError> = std::result::Result<T, E>;
