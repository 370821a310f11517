//! Builds the objects a configuration describes and runs the requested
//! analyses in dependency order: admissibility, criteria, detectors,
//! cross-validation.

use std::sync::Arc;
use std::time::{Duration, Instant};

use anyhow::{anyhow, bail, Context};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use reclab_core::criteria::{
    c0_semiflow_criterion, cross_validate, discrete_spectrum_criterion, liminf_criterion_halfline, lp_semiflow_criterion,
    two_sided_decay_criterion_line, weighted_jacobian_criterion_c0, weighted_jacobian_criterion_lp, Consistency,
    ConsistencyRecord, CriterionVerdict,
};
use reclab_core::recurrence::{
    direct_scan, gdelta_membership, lattice_times, nested_ball_construct, rigidity_scan, uniform_rigidity_scan, Direction,
    DyadicSampler, Method, NestedBallConfig, RecurrenceReport, RigidityReport, Verdict,
};
use reclab_core::semigroups::{
    assemble_matrix, direct_sum, operator_norm_bounds, rotate_operator, spectral_radius_estimate, time_discretize,
    CompositionFamily, DiagonalSemigroup, NormBounds, RationalRotation, Semiflow, SharedFamily, SpectralEstimate,
};
use reclab_core::spaces::{
    check_c0_semiflow_admissible, check_condition_d, check_lp_semiflow_admissible, check_weight_admissible, lattice_1d,
    AdmissibilityCertificate, BoxRegion, DomainKind, DomainSpec, GridFunction, NormMode, WeightFunction, WeightShape,
    WeightedGridSpace,
};
use reclab_core::LabError;

use crate::config::{ExperimentConfig, InitialConfig};
use crate::report::{sha256_hex, sort_rows, Row};

/// Everything a configuration describes, ready to analyse.
pub struct Setup {
    pub family: SharedFamily,
    pub x0: GridFunction,
    /// The translation or composition family the others are derived from.
    pub base: Option<Arc<CompositionFamily>>,
    pub grid: Option<Arc<WeightedGridSpace>>,
    pub weight: WeightFunction,
    pub diagonal: Option<Arc<DiagonalSemigroup>>,
}

impl Setup {
    pub fn semiflow(&self) -> Option<&Semiflow> {
        self.base.as_ref().map(|b| b.semiflow())
    }

    pub fn domain(&self) -> Option<&DomainSpec> {
        self.grid.as_ref().map(|g| g.domain())
    }
}

pub fn norm_mode(cfg: &ExperimentConfig) -> NormMode {
    if cfg.space.mode == "c0" {
        NormMode::C0Sup
    } else {
        NormMode::Lp(cfg.space.p)
    }
}

/// Named weight with its default admissibility claim `(M, omega)`.
pub fn build_weight(cfg: &ExperimentConfig) -> WeightFunction {
    let w = &cfg.weight;
    let get = |k: &str, d: f64| w.params.get(k).copied().unwrap_or(d);
    let (shape, m, omega) = match w.name.as_str() {
        "constant" => (WeightShape::Constant { value: get("value", 1.0) }, 1.0, 0.0),
        "exponential" => {
            let rate = get("rate", -1.0);
            (WeightShape::Exponential { rate }, 1.0, rate.abs())
        }
        "symmetric_exponential" => {
            let rate = get("rate", 1.0);
            (WeightShape::SymmetricExponential { rate }, 1.0, rate.abs())
        }
        "one_sided_exponential" => {
            let rate = get("rate", 1.0);
            (WeightShape::OneSidedExponential { rate }, 1.0, rate.abs())
        }
        "gaussian" => (WeightShape::Gaussian { a: get("a", 1.0) }, 1.0, 1.0),
        "power_decay" => {
            let power = get("power", 1.0);
            (WeightShape::PowerDecay { power }, 1.0, power.abs())
        }
        "rational_bump" => (WeightShape::RationalBump, 1.0, 1.0),
        "modulated_exponential" => (WeightShape::ModulatedExponential, 3.0, 1.0),
        other => unreachable!("validated weight name {other}"),
    };
    WeightFunction::from_shape(shape, get("m", m), get("omega", omega))
}

fn build_semiflow(cfg: &ExperimentConfig, kind: DomainKind) -> Semiflow {
    let f = &cfg.family;
    let get = |k: &str, d: f64| f.semiflow_params.get(k).copied().unwrap_or(d);
    match f.semiflow.as_str() {
        "translation" => Semiflow::translation(1, kind),
        "dilation" => Semiflow::dilation(get("rate", 1.0)),
        "affine" => Semiflow::affine(get("a", 1.0), get("b", 0.0)),
        other => unreachable!("validated semiflow {other}"),
    }
}

fn initial_on_grid(space: &WeightedGridSpace, init: &InitialConfig) -> anyhow::Result<GridFunction> {
    let (lo, hi, amp) = (init.low, init.high, init.amplitude);
    Ok(match init.kind.as_str() {
        "indicator" => space.from_real_fn(|x| if (lo..=hi).contains(&x[0]) { amp } else { 0.0 }),
        "sin2_bump" => space.from_real_fn(|x| {
            if (lo..=hi).contains(&x[0]) {
                amp * (std::f64::consts::PI * (x[0] - lo) / (hi - lo)).sin().powi(2)
            } else {
                0.0
            }
        }),
        "gaussian" => {
            let (mid, half) = (0.5 * (lo + hi), 0.5 * (hi - lo));
            space.from_real_fn(|x| amp * (-((x[0] - mid) / half).powi(2)).exp())
        }
        "basis" => {
            if init.index >= space.len() {
                bail!("analysis.initial.index {} out of range for {} nodes", init.index, space.len());
            }
            space.basis(init.index).scaled(Complex64::new(amp, 0.0))
        }
        "vector" => {
            if init.values.len() != space.len() {
                bail!("analysis.initial.values has {} entries, the space has {}", init.values.len(), space.len());
            }
            space.function(init.values.iter().map(|[re, im]| Complex64::new(*re, *im)).collect())?
        }
        other => unreachable!("validated initial kind {other}"),
    })
}

pub fn build(cfg: &ExperimentConfig) -> anyhow::Result<Setup> {
    let weight = build_weight(cfg);
    let mode = norm_mode(cfg);
    if cfg.is_diagonal() {
        let cycles: Vec<f64> = cfg.family.cycles.iter().map(|c| c.value().expect("validated cycle")).collect();
        let d = Arc::new(DiagonalSemigroup::from_cycles(cycles, mode)?);
        let x0 = initial_on_grid(d.space(), &cfg.analysis.initial)?;
        return Ok(Setup { family: d.clone(), x0, base: None, grid: Some(d.space().clone()), weight, diagonal: Some(d) });
    }
    let domain = match cfg.space.domain.as_str() {
        "line" => DomainSpec::line(cfg.space.trunc)?,
        _ => DomainSpec::half_line(cfg.space.trunc)?,
    };
    let kind = domain.kind;
    let grid = Arc::new(WeightedGridSpace::new(domain, &[cfg.space.grid_points], mode, weight.clone())?);
    let phi = build_semiflow(cfg, kind);
    let base = Arc::new(CompositionFamily::new(grid.clone(), phi)?);
    let x = initial_on_grid(&grid, &cfg.analysis.initial)?;
    let shared: SharedFamily = base.clone();
    let (family, x0): (SharedFamily, GridFunction) = match cfg.family.kind.as_str() {
        "translation" | "composition" => (shared, x),
        "direct_sum" => {
            let sum = direct_sum(shared.clone(), shared);
            let pair = sum.pair(&x, &x)?;
            (Arc::new(sum), pair)
        }
        "discretized" => (Arc::new(time_discretize(shared, cfg.family.t0.expect("validated t0"))?), x),
        "rotated" => {
            let [p, q] = cfg.family.rotation.expect("validated rotation");
            let op = time_discretize(shared, cfg.family.t0.expect("validated t0"))?;
            (Arc::new(rotate_operator(op, RationalRotation::new(p, q as u64)?)), x)
        }
        other => unreachable!("validated family kind {other}"),
    };
    Ok(Setup { family, x0, base: Some(base), grid: Some(grid), weight, diagonal: None })
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityEntry {
    pub name: String,
    pub certificate: AdmissibilityCertificate,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageSummary {
    pub index: usize,
    pub t: f64,
    pub eps: f64,
    pub residual: Option<f64>,
    pub bound: Option<f64>,
    pub holds: Option<bool>,
}

#[derive(Debug, Clone, Serialize)]
pub struct DetectorEntry {
    pub analysis: String,
    pub report: RecurrenceReport,
    pub stages: Vec<StageSummary>,
    pub certified: Option<bool>,
    /// Set when a construction stalled; the report then carries no witnesses.
    pub stalled: Option<String>,
    #[serde(skip)]
    pub y: Option<GridFunction>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SpectrumEntry {
    pub t: f64,
    pub estimate: SpectralEstimate,
    pub norm: NormBounds,
    pub note: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct GDeltaSummary {
    pub target: String,
    pub member_up_to: usize,
    pub k_max: usize,
    pub min_residual: f64,
    pub argmin: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    pub instance: String,
    pub config_hash: String,
    pub version: String,
    /// Kept out of the written files so that reruns are byte-identical.
    #[serde(skip)]
    pub wall_time: Duration,
    pub admissibility: Vec<AdmissibilityEntry>,
    pub criterion: Option<CriterionVerdict>,
    pub detectors: Vec<DetectorEntry>,
    pub gdelta: Option<GDeltaSummary>,
    pub rigidity: Vec<RigidityReport>,
    pub spectrum: Option<SpectrumEntry>,
    pub consistency: Option<ConsistencyRecord>,
    #[serde(skip)]
    pub rows: Vec<Row>,
}

impl RunRecord {
    pub fn contradiction(&self) -> bool {
        self.consistency.as_ref().is_some_and(|c| c.status == Consistency::CriterionNoDetectorYes)
    }

    /// Verdict of the detector of record, if one ran.
    pub fn detector_recurrent(&self) -> Option<bool> {
        self.consistency.as_ref().map(|c| c.detector_verdict == Verdict::WitnessFound)
    }

    pub fn summary(&self) -> Summary {
        Summary {
            instance: self.instance.clone(),
            config_hash: self.config_hash.clone(),
            version: self.version.clone(),
            admissibility: self
                .admissibility
                .iter()
                .map(|a| AdmissibilityLine {
                    name: a.name.clone(),
                    holds: a.certificate.holds,
                    worst_ratio: a.certificate.worst_ratio,
                    samples_checked: a.certificate.samples_checked,
                    samples_skipped: a.certificate.samples_skipped,
                })
                .collect(),
            criterion: self.criterion.as_ref().map(|c| CriterionLine {
                criterion: format!("{:?}", c.criterion),
                holds: c.holds,
                tol: c.tol,
                horizon: c.horizon,
                notes: c.notes.clone(),
            }),
            detectors: self.detectors.clone(),
            gdelta: self.gdelta.clone(),
            rigidity: self
                .rigidity
                .iter()
                .map(|r| RigidityLine {
                    kind: format!("{:?}", r.kind),
                    verdict: r.verdict,
                    tol: r.tol,
                    min_value: r.min_value(),
                    first_witnesses: r.witness_times.iter().take(10).copied().collect(),
                    witness_count: r.witness_times.len(),
                })
                .collect(),
            spectrum: self.spectrum.clone(),
            consistency: self.consistency.as_ref().map(|c| c.status),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AdmissibilityLine {
    pub name: String,
    pub holds: bool,
    pub worst_ratio: f64,
    pub samples_checked: usize,
    pub samples_skipped: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct CriterionLine {
    pub criterion: String,
    pub holds: bool,
    pub tol: f64,
    pub horizon: f64,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct RigidityLine {
    pub kind: String,
    pub verdict: Verdict,
    pub tol: f64,
    pub min_value: f64,
    pub first_witnesses: Vec<f64>,
    pub witness_count: usize,
}

/// The structured summary written next to the CSV.
#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub instance: String,
    pub config_hash: String,
    pub version: String,
    pub admissibility: Vec<AdmissibilityLine>,
    pub criterion: Option<CriterionLine>,
    pub detectors: Vec<DetectorEntry>,
    pub gdelta: Option<GDeltaSummary>,
    pub rigidity: Vec<RigidityLine>,
    pub spectrum: Option<SpectrumEntry>,
    pub consistency: Option<Consistency>,
}

struct Rows<'a> {
    instance: &'a str,
    rows: Vec<Row>,
}

impl Rows<'_> {
    #[allow(clippy::too_many_arguments)]
    fn push(
        &mut self,
        analysis: &str,
        quantity: &str,
        t_or_x: Option<f64>,
        value: f64,
        tol: Option<f64>,
        horizon: Option<f64>,
        truncated: bool,
        method: String,
    ) {
        self.rows.push(Row {
            instance: self.instance.to_string(),
            analysis: analysis.to_string(),
            quantity: quantity.to_string(),
            t_or_x,
            value,
            tol,
            horizon,
            truncated,
            method,
        });
    }

    fn report(&mut self, analysis: &str, r: &RecurrenceReport) {
        let method = format!("detector:{:?}", r.method);
        for (t, res) in r.witness_times.iter().zip(&r.residuals) {
            self.push(analysis, "witness_residual", Some(*t), *res, Some(r.tol), Some(r.horizon), false, method.clone());
        }
        let found = if r.verdict == Verdict::WitnessFound { 1.0 } else { 0.0 };
        self.push(analysis, "witness_found", None, found, Some(r.tol), Some(r.horizon), r.truncation_hit, method);
    }
}

fn direction_of(name: &str) -> Direction {
    if name == "backward" {
        Direction::Backward
    } else {
        Direction::Forward
    }
}

fn criterion_name(cfg: &ExperimentConfig, setup: &Setup) -> String {
    if cfg.analysis.criterion != "auto" {
        return cfg.analysis.criterion.clone();
    }
    if setup.diagonal.is_some() {
        return "discrete_spectrum".into();
    }
    match (setup.semiflow(), setup.domain().map(|d| d.kind)) {
        (Some(Semiflow::Translation { .. }), Some(DomainKind::HalfLine)) => "liminf".into(),
        (Some(Semiflow::Translation { .. }), _) => "two_sided_decay".into(),
        _ if cfg.space.mode == "c0" => "c0_semiflow".into(),
        _ => "lp_semiflow".into(),
    }
}

fn detector_name(cfg: &ExperimentConfig, setup: &Setup) -> String {
    match cfg.analysis.detector.as_str() {
        "auto" if setup.family.has_pullback() => "nested_ball".into(),
        "auto" => "direct_scan".into(),
        other => other.into(),
    }
}

fn compacts(cfg: &ExperimentConfig) -> anyhow::Result<Vec<BoxRegion>> {
    cfg.analysis.compacts.iter().map(|[a, b]| BoxRegion::interval(*a, *b).map_err(Into::into)).collect()
}

/// Evenly spaced samples of the window, kept inside the semiflow's domain.
fn window_samples(domain: &DomainSpec, phi: Option<&Semiflow>, n: usize, cap: f64) -> Vec<Vec<f64>> {
    let (lo, hi) = domain.window_axis(0);
    let (lo, hi) = (lo.max(-cap), hi.min(cap));
    (0..n).map(|i| vec![lo + (i as f64 + 0.5) * (hi - lo) / n as f64]).filter(|x| phi.is_none_or(|p| p.in_domain(x))).collect()
}

fn scalar_certificate(cfg: &ExperimentConfig, setup: &Setup) -> anyhow::Result<AdmissibilityCertificate> {
    let domain = setup.domain().ok_or_else(|| anyhow!("no function-space domain"))?;
    let a = &cfg.analysis;
    let points = window_samples(domain, None, a.adm_samples, 50.0);
    let shifts = lattice_1d(-a.adm_horizon, a.adm_horizon, a.adm_horizon / 20.0);
    Ok(check_weight_admissible(&setup.weight, domain, &points, &shifts)?)
}

fn admissibility(cfg: &ExperimentConfig, setup: &Setup) -> anyhow::Result<Vec<AdmissibilityEntry>> {
    let (Some(phi), Some(domain), Some(grid)) = (setup.semiflow(), setup.domain(), setup.grid.as_ref()) else {
        return Ok(Vec::new());
    };
    let a = &cfg.analysis;
    let mut out = Vec::new();
    if matches!(phi, Semiflow::Translation { .. }) {
        out.push(AdmissibilityEntry { name: "weight".into(), certificate: scalar_certificate(cfg, setup)? });
        return Ok(out);
    }
    let ts: Vec<f64> = lattice_1d(0.0, a.adm_horizon, a.adm_horizon / 20.0).into_iter().map(|v| v[0]).collect();
    let xs = window_samples(domain, Some(phi), a.adm_samples, 1e3);
    let w = &setup.weight;
    let cert = match cfg.space.mode.as_str() {
        "c0" => ("c0_semiflow", check_c0_semiflow_admissible(w, phi, domain, &ts, &xs, &compacts(cfg)?, w.m, w.omega, grid.h())?),
        _ => ("lp_semiflow", check_lp_semiflow_admissible(w, phi, &ts, &xs, w.m, w.omega)?),
    };
    out.push(AdmissibilityEntry { name: cert.0.into(), certificate: cert.1 });
    Ok(out)
}

fn criterion(
    cfg: &ExperimentConfig,
    setup: &Setup,
    scalar: Option<&AdmissibilityCertificate>,
) -> anyhow::Result<CriterionVerdict> {
    let a = &cfg.analysis;
    let name = criterion_name(cfg, setup);
    if name == "discrete_spectrum" {
        let d = setup.diagonal.as_ref().ok_or_else(|| anyhow!("discrete_spectrum needs a diagonal family"))?;
        return Ok(discrete_spectrum_criterion(d, a.crit_tol));
    }
    let (phi, domain) = match (setup.semiflow(), setup.domain()) {
        (Some(p), Some(d)) => (p, d),
        _ => bail!("criterion {name} needs a semiflow family"),
    };
    let times = lattice_times(a.crit_step, a.crit_horizon);
    let w = &setup.weight;
    Ok(match name.as_str() {
        "liminf" => {
            let owned;
            let cert = match scalar {
                Some(c) => c,
                None => {
                    owned = scalar_certificate(cfg, setup)?;
                    &owned
                }
            };
            liminf_criterion_halfline(w, domain, Some(cert), a.crit_horizon, a.crit_window, a.crit_tol)?
        }
        "two_sided_decay" => two_sided_decay_criterion_line(w, domain, &a.probe_points, a.crit_horizon, a.crit_step, a.crit_tol)?,
        "lp_semiflow" => lp_semiflow_criterion(w, phi, &compacts(cfg)?, &times, a.quad_step, a.crit_tol)?,
        "c0_semiflow" => c0_semiflow_criterion(w, phi, domain, &compacts(cfg)?, &times, a.quad_step, a.crit_tol)?,
        "jacobian_lp" | "jacobian_c0" => {
            let xs: Vec<Vec<f64>> = a.probe_points.iter().map(|x| vec![*x]).collect();
            let cond_d = if phi.group_like() {
                None
            } else {
                let samples = window_samples(domain, Some(phi), a.adm_samples, f64::INFINITY);
                Some(check_condition_d(phi, &compacts(cfg)?, &times, &samples)?)
            };
            if name == "jacobian_lp" {
                weighted_jacobian_criterion_lp(w, phi, &xs, &times, a.crit_tol, cond_d.as_ref())?
            } else {
                weighted_jacobian_criterion_c0(w, phi, &xs, &times, a.crit_tol, cond_d.as_ref())?
            }
        }
        other => bail!("unknown criterion {other}"),
    })
}

fn nested_ball(cfg: &ExperimentConfig, setup: &Setup, direction: &str) -> anyhow::Result<DetectorEntry> {
    let a = &cfg.analysis;
    let dir = direction_of(direction);
    let config = NestedBallConfig { step: a.step, horizon: a.horizon, direction: dir };
    let analysis = format!("nested_ball_{direction}");
    match nested_ball_construct(setup.family.as_ref(), &setup.x0, a.eps0, a.stages, config) {
        Ok(c) => {
            let stages = c
                .stages
                .iter()
                .zip(&c.checks)
                .map(|(s, k)| StageSummary {
                    index: s.index,
                    t: s.t,
                    eps: s.eps,
                    residual: Some(k.residual),
                    bound: Some(k.ln_bound.exp()),
                    holds: Some(k.holds),
                })
                .collect();
            Ok(DetectorEntry { analysis, report: c.report, stages, certified: Some(c.certified), stalled: None, y: Some(c.y) })
        }
        Err(LabError::ConstructionStalled { stage, attempts, truncation_limited, partial }) => {
            let verdict = if truncation_limited { Verdict::TruncationLimited } else { Verdict::NoWitnessInRange };
            let report = RecurrenceReport::build(
                setup.family.as_ref(),
                &setup.x0,
                Vec::new(),
                verdict,
                Method::NestedBall,
                a.eps0,
                a.horizon,
                truncation_limited,
            )?
            .with_parameter("eps0", a.eps0)
            .with_parameter("stages", a.stages)
            .with_parameter("direction", direction);
            let stages = partial
                .iter()
                .map(|s| StageSummary { index: s.index, t: s.t, eps: s.eps, residual: None, bound: None, holds: None })
                .collect();
            let msg = format!("stalled at stage {stage} after {attempts} probes (truncation limited: {truncation_limited})");
            Ok(DetectorEntry { analysis, report, stages, certified: Some(false), stalled: Some(msg), y: None })
        }
        Err(e) => Err(e).with_context(|| format!("nested-ball construction ({direction})")),
    }
}

fn random_vectors(setup: &Setup, count: usize, seed: u64) -> Vec<GridFunction> {
    let space = setup.family.state_space();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            if setup.diagonal.is_some() {
                let vals = (0..space.len()).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect();
                space.function(vals).expect("length matches")
            } else {
                // Random profile on the unit cells next to the origin.
                let parts: Vec<GridFunction> = space
                    .parts()
                    .iter()
                    .map(|g| {
                        let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
                        g.from_real_fn(|x| {
                            let k = x[0].floor();
                            if (0.0..4.0).contains(&k) {
                                c[k as usize]
                            } else {
                                0.0
                            }
                        })
                    })
                    .collect();
                space.join(&parts).expect("parts match")
            }
        })
        .collect()
}

/// Runs the operations listed in the configuration.
/// Hash of the configuration with the output section cleared, so the
/// destination does not change the identity of a run.
pub fn config_hash(cfg: &ExperimentConfig) -> String {
    let mut c = cfg.clone();
    c.output = Default::default();
    sha256_hex(c.to_toml().as_bytes())
}

pub fn run(cfg: &ExperimentConfig) -> anyhow::Result<RunRecord> {
    cfg.validate()?;
    let start = Instant::now();
    let setup = build(cfg)?;
    let a = &cfg.analysis;
    let mut rows = Rows { instance: &cfg.name, rows: Vec::new() };

    let admissibility = if cfg.wants("admissibility") { admissibility(cfg, &setup)? } else { Vec::new() };
    for e in &admissibility {
        let c = &e.certificate;
        let method = format!("check:{:?}", c.kind);
        rows.push(
            "admissibility",
            &format!("{}_worst_ratio", e.name),
            c.witness_time,
            c.worst_ratio,
            Some(1.0),
            Some(a.adm_horizon),
            false,
            method.clone(),
        );
        rows.push(
            "admissibility",
            &format!("{}_holds", e.name),
            None,
            c.holds as u8 as f64,
            None,
            Some(a.adm_horizon),
            false,
            method,
        );
    }

    let criterion = if cfg.wants("criterion") {
        let scalar = admissibility.iter().find(|e| e.name == "weight").map(|e| &e.certificate);
        let v = criterion(cfg, &setup, scalar)?;
        let method = format!("criterion:{:?}", v.criterion);
        for ev in &v.evidence {
            rows.push("criterion", &ev.quantity, Some(ev.at), ev.value, Some(v.tol), Some(v.horizon), false, method.clone());
        }
        rows.push("criterion", "holds", None, v.holds as u8 as f64, Some(v.tol), Some(v.horizon), false, method);
        Some(v)
    } else {
        None
    };

    let mut detectors = Vec::new();
    if cfg.wants("direct_scan") {
        let out = direct_scan(setup.family.as_ref(), &setup.x0, &lattice_times(a.step, a.horizon), a.tol)?;
        for p in &out.curve {
            rows.push(
                "direct_scan",
                "residual",
                Some(p.t),
                p.residual,
                Some(a.tol),
                Some(a.horizon),
                p.truncated,
                "detector:DirectScan".into(),
            );
        }
        rows.report("direct_scan", &out.report);
        detectors.push(DetectorEntry {
            analysis: "direct_scan".into(),
            report: out.report,
            stages: Vec::new(),
            certified: None,
            stalled: None,
            y: None,
        });
    }
    if cfg.wants("nested_ball") {
        for d in &a.directions {
            let entry = nested_ball(cfg, &setup, d)?;
            for s in &entry.stages {
                let an = entry.analysis.as_str();
                rows.push(an, "eps", Some(s.t), s.eps, None, Some(a.horizon), false, "detector:NestedBall".into());
                if let (Some(r), Some(b)) = (s.residual, s.bound) {
                    rows.push(an, "stage_residual", Some(s.t), r, Some(b), Some(a.horizon), false, "detector:NestedBall".into());
                }
            }
            rows.report(&entry.analysis, &entry.report);
            detectors.push(entry);
        }
    }

    let gdelta = if cfg.wants("gdelta") {
        let (target, y) = match detectors.iter().find(|d| d.certified == Some(true) && d.y.is_some()) {
            Some(d) => (format!("constructed ({})", d.analysis), d.y.clone().expect("checked")),
            None => ("initial".to_string(), setup.x0.clone()),
        };
        let sampler = DyadicSampler::new(a.gdelta_horizon, a.gdelta_level)?;
        let g = gdelta_membership(setup.family.as_ref(), &y, a.gdelta_k, sampler)?;
        for l in &g.curve {
            rows.push(
                "gdelta",
                "min_residual",
                Some(l.k as f64),
                l.min_residual,
                Some(1.0 / l.k as f64),
                Some(a.gdelta_horizon),
                false,
                "detector:GDelta".into(),
            );
        }
        let first = g.curve.first().expect("k_max >= 1");
        Some(GDeltaSummary {
            target,
            member_up_to: g.member_up_to,
            k_max: a.gdelta_k,
            min_residual: first.min_residual,
            argmin: first.argmin,
            samples: g.samples,
        })
    } else {
        None
    };

    let mut rigidity = Vec::new();
    if cfg.wants("rigidity") {
        let mut vectors = vec![setup.x0.clone()];
        vectors.extend(random_vectors(&setup, a.rigidity_vectors, a.seed));
        let r = rigidity_scan(setup.family.as_ref(), &vectors, &lattice_times(a.step, a.horizon), a.tol)?;
        for (t, v) in r.times.iter().zip(&r.values) {
            rows.push("rigidity", "max_residual", Some(*t), *v, Some(a.tol), Some(a.horizon), false, "detector:Strong".into());
        }
        rigidity.push(r);
    }
    if cfg.wants("uniform_rigidity") {
        let r = uniform_rigidity_scan(setup.family.as_ref(), &lattice_times(a.step, a.horizon), a.tol, a.matrix_cap)?;
        for (t, v) in r.times.iter().zip(&r.values) {
            rows.push(
                "uniform_rigidity",
                "norm_minus_identity",
                Some(*t),
                *v,
                Some(a.tol),
                Some(a.horizon),
                false,
                "detector:Uniform".into(),
            );
        }
        rigidity.push(r);
    }

    let spectrum = if cfg.wants("spectrum") {
        let m = assemble_matrix(setup.family.as_ref(), a.matrix_time, a.matrix_cap)?;
        let estimate = spectral_radius_estimate(&m, a.power_iters, a.power_tol)?;
        let norm = operator_norm_bounds(&m)?;
        let t = Some(a.matrix_time);
        rows.push("spectrum", "spectral_radius", t, estimate.r, Some(a.power_tol), None, false, "check:PowerIteration".into());
        rows.push("spectrum", "norm_lower", t, norm.lower, None, None, false, format!("check:{:?}", norm.method));
        rows.push("spectrum", "norm_upper", t, norm.upper, None, None, false, format!("check:{:?}", norm.method));
        let note = if estimate.r < 1.0 - 5.0 * a.power_tol {
            format!("r = {:.6} < 1: no recurrent vectors", estimate.r)
        } else {
            format!("r = {:.6}: spectral test inconclusive", estimate.r)
        };
        Some(SpectrumEntry { t: a.matrix_time, estimate, norm, note })
    } else {
        None
    };

    let of_record = detector_name(cfg, &setup);
    let record_report = {
        let candidates: Vec<&DetectorEntry> =
            detectors.iter().filter(|d| d.analysis == of_record || d.analysis.starts_with(&format!("{of_record}_"))).collect();
        // Several directions: recurrence needs all of them, so the first
        // failing direction speaks for the detector.
        candidates.iter().find(|d| !d.report.is_recurrent()).or(candidates.first()).map(|d| &d.report)
    };
    let consistency = match (&criterion, record_report) {
        (Some(c), Some(r)) => {
            let rec = cross_validate(c, r);
            let code = match rec.status {
                Consistency::Agree => 0.0,
                Consistency::CriterionYesDetectorNo => 1.0,
                Consistency::CriterionNoDetectorYes => 2.0,
            };
            rows.push("consistency", "status", None, code, None, None, r.truncation_hit, format!("check:{of_record}"));
            Some(rec)
        }
        _ => None,
    };

    let mut rows = rows.rows;
    sort_rows(&mut rows);
    Ok(RunRecord {
        instance: cfg.name.clone(),
        config_hash: config_hash(cfg),
        version: env!("CARGO_PKG_VERSION").to_string(),
        wall_time: start.elapsed(),
        admissibility,
        criterion,
        detectors,
        gdelta,
        rigidity,
        spectrum,
        consistency,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog;

    #[test]
    fn flat_instance_disagrees_with_nothing() {
        let rec = run(&catalog::find("halfline-flat").unwrap().config()).unwrap();
        let c = rec.consistency.as_ref().unwrap();
        assert_eq!(c.status, Consistency::Agree);
        assert!(!rec.criterion.as_ref().unwrap().holds);
        assert_eq!(rec.detector_recurrent(), Some(false));
        assert!(rec.detectors.iter().any(|d| d.stalled.is_some()));
    }

    #[test]
    fn weights_carry_claims() {
        let mut cfg = catalog::find("dilation-lp").unwrap().config();
        let w = build_weight(&cfg);
        assert_eq!((w.m, w.omega), (1.0, 2.0));
        cfg.weight.params.clear();
        assert_eq!(build_weight(&cfg).omega, 1.0);
    }

    #[test]
    fn derived_families_build() {
        let mut cfg = catalog::find("halfline-growing").unwrap().config();
        for kind in ["direct_sum", "discretized", "rotated"] {
            cfg.family.kind = kind.into();
            cfg.family.t0 = Some(1.0);
            cfg.family.rotation = Some([1, 3]);
            let s = build(&cfg).unwrap();
            s.family.state_space().check(&s.x0).unwrap();
        }
    }
}
