use rayon::prelude::*;
use serde::Serialize;

use super::report::{spans_required_scales, Method, RecurrenceReport, Verdict, MIN_WITNESS_TIME};
use crate::error::{LabError, Result};
use crate::semigroups::{residual_flagged, OperatorFamily};
use crate::spaces::GridFunction;

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ScanPoint {
    pub t: f64,
    pub residual: f64,
    pub truncated: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct ScanOutcome {
    pub report: RecurrenceReport,
    pub curve: Vec<ScanPoint>,
}

/// Residual curve `t -> distance(W(t) f, f)` over a time grid.
pub fn residual_curve(family: &dyn OperatorFamily, f: &GridFunction, time_grid: &[f64]) -> Result<Vec<ScanPoint>> {
    time_grid
        .par_iter()
        .map(|&t| residual_flagged(family, f, t).map(|(residual, truncated)| ScanPoint { t, residual, truncated }))
        .collect()
}

/// Collects the times with residual below `tol`. Truncated evaluations are
/// never accepted as witnesses.
pub fn direct_scan(family: &dyn OperatorFamily, f: &GridFunction, time_grid: &[f64], tol: f64) -> Result<ScanOutcome> {
    if time_grid.windows(2).any(|w| !(w[0] < w[1])) {
        return Err(LabError::InvalidParameter("time grid must be strictly increasing".into()));
    }
    if !(tol > 0.0) {
        return Err(LabError::InvalidParameter(format!("tolerance must be positive, got {tol}")));
    }
    let curve = residual_curve(family, f, time_grid)?;
    let witnesses: Vec<f64> =
        curve.iter().filter(|p| !p.truncated && p.residual < tol && p.t.abs() >= MIN_WITNESS_TIME).map(|p| p.t).collect();
    let truncation_hit = curve.iter().any(|p| p.truncated);
    let verdict = if spans_required_scales(&witnesses) {
        Verdict::WitnessFound
    } else if truncation_hit {
        Verdict::TruncationLimited
    } else {
        Verdict::NoWitnessInRange
    };
    let horizon = time_grid.iter().fold(0.0, |a: f64, t| a.max(t.abs()));
    let report = RecurrenceReport::build(family, f, witnesses, verdict, Method::DirectScan, tol, horizon, truncation_hit)?
        .with_parameter("time_points", time_grid.len());
    Ok(ScanOutcome { report, curve })
}

/// `1, 2, ..., floor(horizon / step)` times `step`.
pub fn lattice_times(step: f64, horizon: f64) -> Vec<f64> {
    let n = (horizon / step + 1e-9).floor() as usize;
    (1..=n).map(|k| k as f64 * step).collect()
}
