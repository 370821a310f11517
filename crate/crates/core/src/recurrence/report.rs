use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::error::Result;
use crate::semigroups::{residual, OperatorFamily};
use crate::spaces::GridFunction;

/// Witnesses at times below this are ignored: small times return by continuity alone.
pub const MIN_WITNESS_TIME: f64 = 1.0;

/// Number of distinct dyadic time scales standing in for an unbounded sequence.
pub const REQUIRED_SCALES: usize = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Verdict {
    WitnessFound,
    NoWitnessInRange,
    TruncationLimited,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Method {
    DirectScan,
    NestedBall,
    GDelta,
}

/// Distinct values of `floor(log2 |t|)` over times with `|t| >= 1`.
pub fn dyadic_scales(times: &[f64]) -> usize {
    times.iter().filter(|t| t.abs() >= MIN_WITNESS_TIME).map(|t| t.abs().log2().floor() as i64).collect::<BTreeSet<_>>().len()
}

/// The finite surrogate for an unbounded witness sequence.
pub fn spans_required_scales(times: &[f64]) -> bool {
    times.iter().filter(|t| t.abs() >= MIN_WITNESS_TIME).count() >= REQUIRED_SCALES && dyadic_scales(times) >= REQUIRED_SCALES
}

/// Verdict plus the witness sequence it rests on. Residuals are recomputed
/// from scratch when the report is built, never copied from the detector.
#[derive(Debug, Clone, Serialize)]
pub struct RecurrenceReport {
    pub verdict: Verdict,
    /// Increasing in `|t|`; negative for backward constructions.
    pub witness_times: Vec<f64>,
    pub residuals: Vec<f64>,
    pub method: Method,
    pub tol: f64,
    pub horizon: f64,
    /// Whether any evaluation behind the verdict lost mass to the truncation.
    pub truncation_hit: bool,
    pub parameters: BTreeMap<String, String>,
    pub note: String,
}

impl RecurrenceReport {
    #[allow(clippy::too_many_arguments)]
    pub fn build(
        family: &dyn OperatorFamily,
        y: &GridFunction,
        mut witness_times: Vec<f64>,
        verdict: Verdict,
        method: Method,
        tol: f64,
        horizon: f64,
        truncation_hit: bool,
    ) -> Result<Self> {
        witness_times.sort_by(|a, b| a.abs().total_cmp(&b.abs()));
        witness_times.dedup();
        let residuals = witness_times.iter().map(|&t| residual(family, y, t)).collect::<Result<Vec<_>>>()?;
        Ok(Self {
            verdict,
            witness_times,
            residuals,
            method,
            tol,
            horizon,
            truncation_hit,
            parameters: BTreeMap::new(),
            note: format!("finite horizon {horizon}: witnesses certify finitely many time scales only"),
        })
    }

    pub fn with_parameter(mut self, key: &str, value: impl ToString) -> Self {
        self.parameters.insert(key.to_string(), value.to_string());
        self
    }

    /// Witness times strictly increasing in `|t|`, one residual each.
    pub fn is_well_formed(&self) -> bool {
        self.witness_times.len() == self.residuals.len()
            && self.witness_times.windows(2).all(|w| w[0].abs() < w[1].abs())
            && self.residuals.iter().all(|r| *r >= 0.0)
    }

    pub fn is_recurrent(&self) -> bool {
        self.verdict == Verdict::WitnessFound
    }
}
