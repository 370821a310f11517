use rayon::prelude::*;
use serde::Serialize;

use super::report::{spans_required_scales, Verdict, MIN_WITNESS_TIME};
use crate::error::{LabError, Result};
use crate::semigroups::{assemble_matrix, operator_norm_estimate, residual_flagged, OperatorFamily};
use crate::spaces::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum RigidityKind {
    /// `W(t) f -> f` for every test vector along a common sequence.
    Strong,
    /// `||W(t) - I|| -> 0` along a sequence.
    Uniform,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityReport {
    pub kind: RigidityKind,
    pub verdict: Verdict,
    pub tol: f64,
    pub times: Vec<f64>,
    /// Strong: worst residual over the test vectors. Uniform: `||W(t) - I||`.
    pub values: Vec<f64>,
    pub witness_times: Vec<f64>,
    pub truncation_hit: bool,
}

impl RigidityReport {
    fn from_values(kind: RigidityKind, tol: f64, times: &[f64], values: Vec<f64>, truncated: Vec<bool>) -> Self {
        let witness_times: Vec<f64> = times
            .iter()
            .zip(values.iter().zip(&truncated))
            .filter(|(t, (v, tr))| !**tr && **v < tol && t.abs() >= MIN_WITNESS_TIME)
            .map(|(t, _)| *t)
            .collect();
        let truncation_hit = truncated.iter().any(|t| *t);
        let verdict = if spans_required_scales(&witness_times) {
            Verdict::WitnessFound
        } else if truncation_hit {
            Verdict::TruncationLimited
        } else {
            Verdict::NoWitnessInRange
        };
        Self { kind, verdict, tol, times: times.to_vec(), values, witness_times, truncation_hit }
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

/// Worst residual over `test_vectors` at each time.
pub fn rigidity_scan(
    family: &dyn OperatorFamily,
    test_vectors: &[GridFunction],
    time_grid: &[f64],
    tol: f64,
) -> Result<RigidityReport> {
    if test_vectors.is_empty() {
        return Err(LabError::InvalidParameter("no test vectors".into()));
    }
    let rows: Vec<(f64, bool)> = time_grid
        .par_iter()
        .map(|&t| {
            let mut worst = 0.0f64;
            let mut truncated = false;
            for f in test_vectors {
                let (r, tr) = residual_flagged(family, f, t)?;
                worst = worst.max(r);
                truncated |= tr;
            }
            Ok((worst, truncated))
        })
        .collect::<Result<_>>()?;
    let (values, truncated) = rows.into_iter().unzip();
    Ok(RigidityReport::from_values(RigidityKind::Strong, tol, time_grid, values, truncated))
}

/// `||W(t) - I||` from the assembled matrix at each time.
pub fn uniform_rigidity_scan(family: &dyn OperatorFamily, time_grid: &[f64], tol: f64, cap: usize) -> Result<RigidityReport> {
    let values: Vec<f64> = time_grid
        .par_iter()
        .map(|&t| operator_norm_estimate(&assemble_matrix(family, t, cap)?.minus_identity()))
        .collect::<Result<_>>()?;
    let truncated = vec![false; time_grid.len()];
    Ok(RigidityReport::from_values(RigidityKind::Uniform, tol, time_grid, values, truncated))
}
