use serde::Serialize;

use crate::recurrence::{spans_required_scales, Direction, RecurrenceReport, Verdict};

/// Threshold below which a sampled quantity counts as having reached its limit 0.
pub const TOL_CRIT: f64 = 1e-4;

/// Default time horizon for criterion evaluation.
pub const CRIT_HORIZON: f64 = 1e3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CriterionKind {
    LimInfHalfLine,
    PointwiseDecayLine,
    LpSemiflowMass,
    C0SemiflowSup,
    WeightedJacobianLp,
    WeightedJacobianC0,
    /// Finite-dimensional diagonal families: unimodular spectrum.
    DiscreteSpectrum,
}

#[derive(Debug, Clone, Serialize)]
pub struct Evidence {
    pub quantity: String,
    /// A time or a point, depending on the criterion.
    pub at: f64,
    pub value: f64,
}

impl Evidence {
    pub fn new(quantity: impl Into<String>, at: f64, value: f64) -> Self {
        Self { quantity: quantity.into(), at, value }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionVerdict {
    pub criterion: CriterionKind,
    pub holds: bool,
    pub evidence: Vec<Evidence>,
    pub horizon: f64,
    pub tol: f64,
    pub direction: Option<Direction>,
    pub notes: Vec<String>,
}

impl CriterionVerdict {
    /// Both verdicts must hold; evidence and notes are concatenated.
    pub fn and(mut self, other: CriterionVerdict) -> CriterionVerdict {
        self.holds = self.holds && other.holds;
        self.evidence.extend(other.evidence);
        self.notes.extend(other.notes);
        self.direction = if self.direction == other.direction { self.direction } else { None };
        self
    }
}

/// "lim inf = 0" on a finite sample: values below `tol` at points spanning
/// the required number of dyadic scales.
pub fn dips_below(samples: &[(f64, f64)], tol: f64) -> bool {
    let hits: Vec<f64> = samples.iter().filter(|(_, v)| *v < tol).map(|(t, _)| *t).collect();
    spans_required_scales(&hits)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Consistency {
    Agree,
    CriterionYesDetectorNo,
    /// The criterion is necessary, so this is a contradiction.
    CriterionNoDetectorYes,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConsistencyRecord {
    pub status: Consistency,
    pub criterion: CriterionVerdict,
    pub detector_verdict: Verdict,
    pub detector_witnesses: Vec<f64>,
    pub detector_residuals: Vec<f64>,
}

pub fn cross_validate(criterion: &CriterionVerdict, detector: &RecurrenceReport) -> ConsistencyRecord {
    let found = detector.verdict == Verdict::WitnessFound;
    let status = match (criterion.holds, found) {
        (true, true) | (false, false) => Consistency::Agree,
        (true, false) => Consistency::CriterionYesDetectorNo,
        (false, true) => Consistency::CriterionNoDetectorYes,
    };
    ConsistencyRecord {
        status,
        criterion: criterion.clone(),
        detector_verdict: detector.verdict,
        detector_witnesses: detector.witness_times.clone(),
        detector_residuals: detector.residuals.clone(),
    }
}
