//! Experiment configuration: a versioned TOML document plus semantic validation.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;

use anyhow::Context;
use serde::{Deserialize, Serialize};

use reclab_core::semigroups::DEFAULT_MATRIX_CAP;

pub const SCHEMA_VERSION: u32 = 1;

pub const WEIGHT_NAMES: &[&str] = &[
    "constant",
    "exponential",
    "symmetric_exponential",
    "one_sided_exponential",
    "gaussian",
    "power_decay",
    "rational_bump",
    "modulated_exponential",
];
pub const SEMIFLOW_NAMES: &[&str] = &["translation", "dilation", "affine"];
pub const FAMILY_KINDS: &[&str] = &["translation", "composition", "diagonal", "direct_sum", "rotated", "discretized"];
pub const OPERATIONS: &[&str] =
    &["admissibility", "criterion", "direct_scan", "nested_ball", "gdelta", "rigidity", "uniform_rigidity", "spectrum"];
pub const CRITERIA: &[&str] =
    &["auto", "liminf", "two_sided_decay", "lp_semiflow", "c0_semiflow", "jacobian_lp", "jacobian_c0", "discrete_spectrum"];
pub const DETECTORS: &[&str] = &["auto", "nested_ball", "direct_scan"];
pub const INITIAL_KINDS: &[&str] = &["indicator", "sin2_bump", "gaussian", "basis", "vector"];

/// Operations that assemble dense matrices and are bound by `matrix_cap`.
pub const MATRIX_OPERATIONS: &[&str] = &["uniform_rigidity", "spectrum"];

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub schema_version: u32,
    /// Label used in report rows and file names.
    pub name: String,
    pub space: SpaceConfig,
    pub weight: WeightConfig,
    pub family: FamilyConfig,
    #[serde(default)]
    pub analysis: AnalysisConfig,
    #[serde(default)]
    pub output: OutputConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceConfig {
    /// `half_line` or `line`. Ignored by diagonal families.
    #[serde(default = "default_domain")]
    pub domain: String,
    #[serde(default = "default_trunc")]
    pub trunc: f64,
    #[serde(default = "default_grid_points")]
    pub grid_points: usize,
    /// `lp` or `c0`.
    #[serde(default = "default_mode")]
    pub mode: String,
    #[serde(default = "default_p")]
    pub p: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WeightConfig {
    pub name: String,
    #[serde(default)]
    pub params: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FamilyConfig {
    pub kind: String,
    #[serde(default = "default_semiflow")]
    pub semiflow: String,
    #[serde(default)]
    pub semiflow_params: BTreeMap<String, f64>,
    /// `[p, q]` for `lambda = exp(2 pi i p / q)`.
    #[serde(default)]
    pub rotation: Option<[i64; 2]>,
    #[serde(default)]
    pub t0: Option<f64>,
    /// Diagonal frequencies in turns: `theta_j = 2 pi c_j`. Entries are
    /// either numbers or strings of the form `"sqrt:2"`.
    #[serde(default)]
    pub cycles: Vec<Cycle>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cycle {
    Value(f64),
    Expr(String),
}

impl Cycle {
    pub fn value(&self) -> Option<f64> {
        match self {
            Cycle::Value(v) => Some(*v),
            Cycle::Expr(s) => {
                let (op, arg) = s.split_once(':')?;
                let x: f64 = arg.trim().parse().ok()?;
                match op.trim() {
                    "sqrt" if x >= 0.0 => Some(x.sqrt()),
                    _ => None,
                }
            }
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct InitialConfig {
    #[serde(default = "default_initial_kind")]
    pub kind: String,
    #[serde(default)]
    pub low: f64,
    #[serde(default = "one")]
    pub high: f64,
    #[serde(default = "one")]
    pub amplitude: f64,
    #[serde(default)]
    pub index: usize,
    /// `[re, im]` pairs for `vector`.
    #[serde(default)]
    pub values: Vec<[f64; 2]>,
}

impl Default for InitialConfig {
    fn default() -> Self {
        Self { kind: default_initial_kind(), low: 0.0, high: 1.0, amplitude: 1.0, index: 0, values: Vec::new() }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AnalysisConfig {
    #[serde(default = "default_operations")]
    pub operations: Vec<String>,
    #[serde(default = "default_auto")]
    pub criterion: String,
    #[serde(default = "default_auto")]
    pub detector: String,
    #[serde(default)]
    pub initial: InitialConfig,

    #[serde(default = "default_crit_tol")]
    pub crit_tol: f64,
    #[serde(default = "default_crit_horizon")]
    pub crit_horizon: f64,
    #[serde(default = "one")]
    pub crit_step: f64,
    /// Window length for the lim inf criterion.
    #[serde(default = "one")]
    pub crit_window: f64,
    /// Base points for the pointwise decay criterion on the line.
    #[serde(default = "default_probe_points")]
    pub probe_points: Vec<f64>,
    #[serde(default = "default_compacts")]
    pub compacts: Vec<[f64; 2]>,
    /// Quadrature step over compacts.
    #[serde(default = "default_quad_step")]
    pub quad_step: f64,

    #[serde(default = "default_tol")]
    pub tol: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    #[serde(default = "one")]
    pub step: f64,
    #[serde(default)]
    pub seed: u64,

    #[serde(default = "default_eps0")]
    pub eps0: f64,
    #[serde(default = "default_stages")]
    pub stages: usize,
    #[serde(default = "default_directions")]
    pub directions: Vec<String>,

    #[serde(default = "default_gdelta_k")]
    pub gdelta_k: usize,
    #[serde(default)]
    pub gdelta_level: u32,
    #[serde(default = "default_gdelta_horizon")]
    pub gdelta_horizon: f64,

    #[serde(default = "default_rigidity_vectors")]
    pub rigidity_vectors: usize,
    #[serde(default = "default_matrix_cap")]
    pub matrix_cap: usize,
    #[serde(default = "one")]
    pub matrix_time: f64,
    #[serde(default = "default_power_iters")]
    pub power_iters: usize,
    #[serde(default = "default_power_tol")]
    pub power_tol: f64,

    /// Largest sampled time and number of samples for admissibility checks.
    #[serde(default = "default_adm_horizon")]
    pub adm_horizon: f64,
    #[serde(default = "default_adm_samples")]
    pub adm_samples: usize,
}

impl Default for AnalysisConfig {
    fn default() -> Self {
        toml::from_str("").expect("analysis defaults")
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default)]
    pub path: Option<String>,
    #[serde(default = "default_format")]
    pub format: String,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self { path: None, format: default_format() }
    }
}

fn one() -> f64 {
    1.0
}
fn default_domain() -> String {
    "half_line".into()
}
fn default_trunc() -> f64 {
    200.0
}
fn default_grid_points() -> usize {
    20_000
}
fn default_mode() -> String {
    "lp".into()
}
fn default_p() -> f64 {
    1.0
}
fn default_semiflow() -> String {
    "translation".into()
}
fn default_initial_kind() -> String {
    "indicator".into()
}
fn default_operations() -> Vec<String> {
    ["admissibility", "criterion", "nested_ball"].iter().map(|s| s.to_string()).collect()
}
fn default_auto() -> String {
    "auto".into()
}
fn default_crit_tol() -> f64 {
    reclab_core::criteria::TOL_CRIT
}
fn default_crit_horizon() -> f64 {
    reclab_core::criteria::CRIT_HORIZON
}
fn default_probe_points() -> Vec<f64> {
    vec![-1.0, 0.0, 1.0]
}
fn default_compacts() -> Vec<[f64; 2]> {
    vec![[1.0, 2.0]]
}
fn default_quad_step() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    0.5
}
fn default_horizon() -> f64 {
    1e3
}
fn default_eps0() -> f64 {
    0.5
}
fn default_stages() -> usize {
    6
}
fn default_directions() -> Vec<String> {
    vec!["forward".into()]
}
fn default_gdelta_k() -> usize {
    10
}
fn default_gdelta_horizon() -> f64 {
    64.0
}
fn default_rigidity_vectors() -> usize {
    4
}
fn default_matrix_cap() -> usize {
    DEFAULT_MATRIX_CAP
}
fn default_power_iters() -> usize {
    2000
}
fn default_power_tol() -> f64 {
    1e-9
}
fn default_adm_horizon() -> f64 {
    10.0
}
fn default_adm_samples() -> usize {
    200
}
fn default_format() -> String {
    "csv".into()
}

/// One schema violation, addressed by its dotted path.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Problem {
    pub path: String,
    pub message: String,
}

impl fmt::Display for Problem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.path, self.message)
    }
}

#[derive(Debug, Clone)]
pub struct ValidationError {
    pub problems: Vec<Problem>,
}

impl ValidationError {
    pub fn mentions(&self, path: &str) -> bool {
        self.problems.iter().any(|p| p.path == path)
    }
}

impl fmt::Display for ValidationError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "invalid configuration ({} problem(s)):", self.problems.len())?;
        for p in &self.problems {
            writeln!(f, "  {p}")?;
        }
        Ok(())
    }
}

impl std::error::Error for ValidationError {}

/// Allowed parameter keys per weight name. `m` and `omega` override the
/// admissibility claim and are accepted everywhere.
fn weight_params(name: &str) -> &'static [&'static str] {
    match name {
        "constant" => &["value"],
        "exponential" | "symmetric_exponential" | "one_sided_exponential" => &["rate"],
        "gaussian" => &["a"],
        "power_decay" => &["power"],
        _ => &[],
    }
}

fn semiflow_params(name: &str) -> &'static [&'static str] {
    match name {
        "dilation" => &["rate"],
        "affine" => &["a", "b"],
        _ => &[],
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> anyhow::Result<Self> {
        let cfg: ExperimentConfig = toml::from_str(text).context("malformed configuration")?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> anyhow::Result<Self> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        Self::from_toml(&text).with_context(|| format!("loading {}", path.display()))
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration serializes")
    }

    pub fn is_diagonal(&self) -> bool {
        self.family.kind == "diagonal"
    }

    pub fn wants(&self, op: &str) -> bool {
        self.analysis.operations.iter().any(|o| o == op)
    }

    /// State dimension seen by matrix assembly.
    pub fn state_dimension(&self) -> usize {
        if self.is_diagonal() {
            self.family.cycles.len()
        } else if self.family.kind == "direct_sum" {
            2 * self.space.grid_points
        } else {
            self.space.grid_points
        }
    }

    /// Collects every problem instead of stopping at the first.
    pub fn validate(&self) -> Result<(), ValidationError> {
        let mut problems = Vec::new();
        let mut bad = |path: &str, message: String| problems.push(Problem { path: path.into(), message });

        if self.schema_version != SCHEMA_VERSION {
            bad("schema_version", format!("unsupported version {}, expected {SCHEMA_VERSION}", self.schema_version));
        }
        if self.name.trim().is_empty() || self.name.contains(['/', '\\', ',']) {
            bad("name", format!("{:?} is not usable as a report label", self.name));
        }

        let s = &self.space;
        if !self.is_diagonal() {
            if !["half_line", "line"].contains(&s.domain.as_str()) {
                bad("space.domain", format!("unknown domain {:?} (half_line, line)", s.domain));
            }
            if !(s.trunc > 0.0 && s.trunc.is_finite()) {
                bad("space.trunc", format!("must be positive and finite, got {}", s.trunc));
            }
            if s.grid_points < 2 {
                bad("space.grid_points", format!("need at least 2 points, got {}", s.grid_points));
            }
        }
        if !["lp", "c0"].contains(&s.mode.as_str()) {
            bad("space.mode", format!("unknown mode {:?} (lp, c0)", s.mode));
        }
        if s.mode == "lp" && !(s.p >= 1.0 && s.p.is_finite()) {
            bad("space.p", format!("p must lie in [1, inf), got {}", s.p));
        }

        let w = &self.weight;
        if !WEIGHT_NAMES.contains(&w.name.as_str()) {
            bad("weight.name", format!("unknown weight {:?}; known: {}", w.name, WEIGHT_NAMES.join(", ")));
        } else {
            let allowed = weight_params(&w.name);
            for (k, v) in &w.params {
                if !(allowed.contains(&k.as_str()) || k == "m" || k == "omega") {
                    bad(&format!("weight.params.{k}"), format!("not a parameter of {}", w.name));
                } else if !v.is_finite() {
                    bad(&format!("weight.params.{k}"), "must be finite".into());
                }
            }
            if w.params.get("m").is_some_and(|m| *m <= 0.0) {
                bad("weight.params.m", "M must be positive".into());
            }
            if w.params.get("omega").is_some_and(|o| *o < 0.0) {
                bad("weight.params.omega", "omega must be nonnegative".into());
            }
            if w.name == "constant" && w.params.get("value").is_some_and(|v| *v <= 0.0) {
                bad("weight.params.value", "a weight must be positive".into());
            }
        }

        let f = &self.family;
        if !FAMILY_KINDS.contains(&f.kind.as_str()) {
            bad("family.kind", format!("unknown family kind {:?}; known: {}", f.kind, FAMILY_KINDS.join(", ")));
        }
        if !SEMIFLOW_NAMES.contains(&f.semiflow.as_str()) {
            bad("family.semiflow", format!("unknown semiflow {:?}; known: {}", f.semiflow, SEMIFLOW_NAMES.join(", ")));
        } else {
            let allowed = semiflow_params(&f.semiflow);
            for k in f.semiflow_params.keys() {
                if !allowed.contains(&k.as_str()) {
                    bad(&format!("family.semiflow_params.{k}"), format!("not a parameter of {}", f.semiflow));
                }
            }
        }
        if f.kind == "translation" && f.semiflow != "translation" {
            bad("family.semiflow", "translation families use the translation semiflow".into());
        }
        if f.kind == "diagonal" {
            if f.cycles.is_empty() {
                bad("family.cycles", "diagonal families need at least one frequency".into());
            }
            for (i, c) in f.cycles.iter().enumerate() {
                if c.value().is_none_or(|v| !v.is_finite()) {
                    bad(&format!("family.cycles[{i}]"), format!("cannot evaluate {c:?}"));
                }
            }
        }
        if ["rotated", "discretized"].contains(&f.kind.as_str()) {
            match f.t0 {
                Some(t0) if t0 > 0.0 && t0.is_finite() => {}
                _ => bad("family.t0", format!("{} families need t0 > 0", f.kind)),
            }
        }
        if f.kind == "rotated" {
            match f.rotation {
                Some([_, q]) if q > 0 => {}
                _ => bad("family.rotation", "rotated families need [p, q] with q > 0".into()),
            }
        }

        let a = &self.analysis;
        for (i, op) in a.operations.iter().enumerate() {
            if !OPERATIONS.contains(&op.as_str()) {
                bad(&format!("analysis.operations[{i}]"), format!("unknown operation {op:?}; known: {}", OPERATIONS.join(", ")));
            }
        }
        if !CRITERIA.contains(&a.criterion.as_str()) {
            bad("analysis.criterion", format!("unknown criterion {:?}; known: {}", a.criterion, CRITERIA.join(", ")));
        }
        if !DETECTORS.contains(&a.detector.as_str()) {
            bad("analysis.detector", format!("unknown detector {:?}; known: {}", a.detector, DETECTORS.join(", ")));
        }
        if !INITIAL_KINDS.contains(&a.initial.kind.as_str()) {
            bad(
                "analysis.initial.kind",
                format!("unknown initial vector {:?}; known: {}", a.initial.kind, INITIAL_KINDS.join(", ")),
            );
        }
        if ["indicator", "sin2_bump", "gaussian"].contains(&a.initial.kind.as_str())
            && a.initial.low.partial_cmp(&a.initial.high) != Some(std::cmp::Ordering::Less)
        {
            bad("analysis.initial.high", "need low < high".into());
        }
        for (path, v) in [
            ("analysis.crit_tol", a.crit_tol),
            ("analysis.crit_horizon", a.crit_horizon),
            ("analysis.crit_step", a.crit_step),
            ("analysis.crit_window", a.crit_window),
            ("analysis.quad_step", a.quad_step),
            ("analysis.tol", a.tol),
            ("analysis.horizon", a.horizon),
            ("analysis.step", a.step),
            ("analysis.gdelta_horizon", a.gdelta_horizon),
            ("analysis.power_tol", a.power_tol),
            ("analysis.adm_horizon", a.adm_horizon),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                bad(path, format!("must be positive and finite, got {v}"));
            }
        }
        if !(a.eps0 > 0.0 && a.eps0 < 1.0) {
            bad("analysis.eps0", format!("must lie in (0, 1), got {}", a.eps0));
        }
        if a.stages == 0 {
            bad("analysis.stages", "at least one stage".into());
        }
        for (i, d) in a.directions.iter().enumerate() {
            if !["forward", "backward"].contains(&d.as_str()) {
                bad(&format!("analysis.directions[{i}]"), format!("unknown direction {d:?}"));
            }
        }
        if a.gdelta_k == 0 {
            bad("analysis.gdelta_k", "must be positive".into());
        }
        if a.gdelta_level > reclab_core::recurrence::MAX_DYADIC_LEVEL {
            bad("analysis.gdelta_level", format!("at most {}", reclab_core::recurrence::MAX_DYADIC_LEVEL));
        }
        if a.gdelta_horizon <= 1.0 {
            bad("analysis.gdelta_horizon", "must exceed 1".into());
        }
        if a.adm_samples == 0 {
            bad("analysis.adm_samples", "must be positive".into());
        }
        if a.operations.iter().any(|o| MATRIX_OPERATIONS.contains(&o.as_str())) && self.state_dimension() > a.matrix_cap {
            bad("space.grid_points", format!("matrix size {} exceeds the matrix cap {}", self.state_dimension(), a.matrix_cap));
        }

        if !["csv", "structured"].contains(&self.output.format.as_str()) {
            bad("output.format", format!("unknown format {:?} (csv, structured)", self.output.format));
        }

        if problems.is_empty() {
            Ok(())
        } else {
            Err(ValidationError { problems })
        }
    }
}
