use std::collections::BTreeMap;

use serde::Serialize;

use super::oracle::{pullback_probe, ProbeOutcome, TransitivityWitness};
use super::report::{spans_required_scales, Method, RecurrenceReport, Verdict, MIN_WITNESS_TIME};
use crate::error::{LabError, Result};
use crate::semigroups::{OperatorFamily, TimeDomain};
use crate::spaces::GridFunction;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Direction {
    Forward,
    Backward,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NestedBallConfig {
    /// Candidate times are integer multiples of `step`.
    pub step: f64,
    pub horizon: f64,
    pub direction: Direction,
}

impl Default for NestedBallConfig {
    fn default() -> Self {
        Self { step: 1.0, horizon: 1e4, direction: Direction::Forward }
    }
}

/// One accepted stage: `x_n = x_{n-1} + P_{t_n} x_{n-1}` and the radius `eps_n`
/// of the next ball. `eps` may underflow to 0; `ln_eps` stays exact.
#[derive(Debug, Clone, Serialize)]
pub struct Stage {
    pub index: usize,
    pub t: f64,
    pub eps: f64,
    pub ln_eps: f64,
    #[serde(skip)]
    pub center: GridFunction,
    /// `distance(x_n, x_{n-1})`
    pub in_ball_residual: f64,
    /// `distance(W(t_n) x_n, x_{n-1})`
    pub return_residual: f64,
    pub ln_lip: f64,
    pub probes: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct StageCheck {
    pub t: f64,
    pub residual: f64,
    /// `ln(2 eps_{n-1})`
    pub ln_bound: f64,
    pub holds: bool,
}

#[derive(Debug, Clone)]
pub struct Construction {
    pub y: GridFunction,
    pub eps0: f64,
    pub stages: Vec<Stage>,
    pub checks: Vec<StageCheck>,
    /// `distance(y, x0)`
    pub ball_distance: f64,
    pub certified: bool,
    pub report: RecurrenceReport,
}

/// `ln(e^a - e^b)` for `b < a`.
fn ln_sub(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp()).ln_1p()
}

/// Radius of the next ball: small enough that every point of the closed ball
/// stays in the previous ball and is returned into it by `W(t_n)`.
pub fn next_ln_eps(ln_eps_prev: f64, in_ball: f64, back: f64, ln_lip: f64, index: usize) -> f64 {
    let ln2 = std::f64::consts::LN_2;
    let a = ln_sub(ln_eps_prev, in_ball.ln()) - ln2;
    let b = ln_sub(ln_eps_prev, back.ln()) - ln2 - ln_lip.max(0.0);
    let cap = -((index + 1) as f64) * ln2;
    a.min(b).min(cap)
}

struct Search<'a> {
    family: &'a dyn OperatorFamily,
    center: &'a GridFunction,
    eps: f64,
    sign: f64,
    step: f64,
    probes: usize,
    cache: BTreeMap<u64, ProbeOutcome>,
}

impl Search<'_> {
    fn probe(&mut self, k: u64) -> Result<&ProbeOutcome> {
        if !self.cache.contains_key(&k) {
            self.probes += 1;
            let out = pullback_probe(self.family, self.center, self.eps, self.sign * k as f64 * self.step)?;
            self.cache.insert(k, out);
        }
        Ok(&self.cache[&k])
    }

    fn rejected(&mut self, k: u64) -> Result<bool> {
        Ok(matches!(self.probe(k)?, ProbeOutcome::Rejected { .. }))
    }

    /// First lattice index in `[lo, hi]` whose probe is not a rejection,
    /// assuming rejections come first. Gallops, then bisects.
    fn first_non_rejected(&mut self, lo: u64, hi: u64) -> Result<Option<u64>> {
        let mut last_rejected = lo - 1;
        let mut gap = 1u64;
        let upper = loop {
            let k = (last_rejected + gap).min(hi);
            if !self.rejected(k)? {
                break k;
            }
            if k == hi {
                return Ok(None);
            }
            last_rejected = k;
            gap *= 2;
        };
        let (mut a, mut b) = (last_rejected, upper);
        while b - a > 1 {
            let mid = a + (b - a) / 2;
            if self.rejected(mid)? {
                a = mid;
            } else {
                b = mid;
            }
        }
        Ok(Some(b))
    }
}

/// Builds `y` in `B(x0, eps0)` with `distance(W(t_n) y, y) <= 2 eps_{n-1}` at
/// `stages` increasing times, by nesting closed balls around pullback witnesses.
pub fn nested_ball_construct(
    family: &dyn OperatorFamily,
    x0: &GridFunction,
    eps0: f64,
    stages: usize,
    config: NestedBallConfig,
) -> Result<Construction> {
    if !(eps0 > 0.0 && eps0 < 1.0) {
        return Err(LabError::InvalidParameter(format!("eps0 must lie in (0, 1), got {eps0}")));
    }
    if stages == 0 {
        return Err(LabError::InvalidParameter("at least one stage is required".into()));
    }
    if !(config.step > 0.0 && config.horizon >= config.step) {
        return Err(LabError::InvalidParameter("need 0 < step <= horizon".into()));
    }
    if !family.has_pullback() {
        return Err(LabError::OracleUnavailable(format!("{} has no pullback", family.description())));
    }
    if config.direction == Direction::Backward && family.time_domain() != TimeDomain::Group {
        return Err(LabError::Precondition("backward construction needs a group".into()));
    }
    family.state_space().check(x0)?;
    let sign = if config.direction == Direction::Forward { 1.0 } else { -1.0 };
    let k_max = (config.horizon / config.step + 1e-9).floor() as u64;
    let k_min = ((MIN_WITNESS_TIME / config.step) - 1e-9).ceil().max(1.0) as u64;

    let mut built: Vec<Stage> = Vec::with_capacity(stages);
    let mut center = x0.clone();
    let mut ln_eps = eps0.ln();
    let mut k_prev = k_min - 1;
    for index in 1..=stages {
        let lo = k_prev + 1;
        let mut search =
            Search { family, center: &center, eps: ln_eps.exp(), sign, step: config.step, probes: 0, cache: BTreeMap::new() };
        if search.eps == 0.0 {
            return Err(LabError::ConstructionStalled { stage: index, attempts: 0, truncation_limited: false, partial: built });
        }
        let found = if lo <= k_max { search.first_non_rejected(lo, k_max)? } else { None };
        let probes = search.probes;
        let witness: TransitivityWitness = match found.map(|k| (k, search.cache.remove(&k))) {
            Some((k, Some(ProbeOutcome::Accepted(w)))) => {
                k_prev = k;
                w
            }
            Some(_) => {
                return Err(LabError::ConstructionStalled {
                    stage: index,
                    attempts: probes,
                    truncation_limited: true,
                    partial: built,
                })
            }
            None => {
                return Err(LabError::ConstructionStalled {
                    stage: index,
                    attempts: probes,
                    truncation_limited: false,
                    partial: built,
                })
            }
        };
        let ln_lip = family.ln_norm_bound(witness.t)?;
        let next = next_ln_eps(ln_eps, witness.in_ball_residual, witness.return_residual, ln_lip, index);
        built.push(Stage {
            index,
            t: witness.t,
            eps: next.exp(),
            ln_eps: next,
            center: witness.g.clone(),
            in_ball_residual: witness.in_ball_residual,
            return_residual: witness.return_residual,
            ln_lip,
            probes,
        });
        center = witness.g;
        ln_eps = next;
    }

    let y = center;
    let space = family.state_space();
    let ball_distance = space.distance(&y, x0)?;
    let times: Vec<f64> = built.iter().map(|s| s.t).collect();
    let certified_pre = ball_distance < eps0;
    let provisional = RecurrenceReport::build(
        family,
        &y,
        times.clone(),
        Verdict::NoWitnessInRange,
        Method::NestedBall,
        eps0,
        config.horizon,
        false,
    )?;
    let mut checks = Vec::with_capacity(built.len());
    let mut prev_ln = eps0.ln();
    for (stage, &r) in built.iter().zip(&provisional.residuals) {
        let ln_bound = std::f64::consts::LN_2 + prev_ln;
        checks.push(StageCheck { t: stage.t, residual: r, ln_bound, holds: r == 0.0 || r.ln() <= ln_bound });
        prev_ln = stage.ln_eps;
    }
    let certified = certified_pre && checks.iter().all(|c| c.holds);
    let verdict = if certified && spans_required_scales(&times) { Verdict::WitnessFound } else { Verdict::NoWitnessInRange };
    let report = RecurrenceReport { verdict, ..provisional }
        .with_parameter("eps0", eps0)
        .with_parameter("stages", stages)
        .with_parameter("step", config.step)
        .with_parameter("direction", format!("{:?}", config.direction));
    Ok(Construction { y, eps0, stages: built, checks, ball_distance, certified, report })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroups::CompositionFamily;
    use crate::spaces::{BoxRegion, DomainSpec, NormMode, WeightFunction, WeightShape, WeightedGridSpace};
    use std::sync::Arc;

    fn expdecay() -> (Arc<WeightedGridSpace>, CompositionFamily) {
        let s = Arc::new(
            WeightedGridSpace::new(
                DomainSpec::half_line(200.0).unwrap(),
                &[20_000],
                NormMode::Lp(1.0),
                WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0),
            )
            .unwrap(),
        );
        let fam = CompositionFamily::translation(s.clone()).unwrap();
        (s, fam)
    }

    #[test]
    fn radius_recursion_respects_all_three_caps() {
        let ln = next_ln_eps(0.5f64.ln(), 0.1, 0.0, 0.0, 1);
        assert!((ln.exp() - 0.2).abs() < 1e-15);
        let ln = next_ln_eps(0.5f64.ln(), 0.0, 0.1, 1.0, 1);
        assert!((ln.exp() - 0.4 / 2.0 / 1f64.exp()).abs() < 1e-15);
        assert!((next_ln_eps(0.5f64.ln(), 0.0, 0.0, 0.0, 3).exp() - 1.0 / 16.0).abs() < 1e-15);
        // far below the float range
        let tiny = next_ln_eps(-800.0, 0.0, 0.0, 500.0, 6);
        assert!((tiny - (-800.0 - std::f64::consts::LN_2 - 500.0)).abs() < 1e-9);
    }

    #[test]
    fn half_line_construction_certifies() {
        let (s, fam) = expdecay();
        let x0 = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let c = nested_ball_construct(&fam, &x0, 0.5, 6, NestedBallConfig::default()).unwrap();
        assert!(c.certified);
        assert_eq!(c.report.verdict, Verdict::WitnessFound);
        assert!(c.ball_distance < 0.5);
        assert!(c.report.is_well_formed());
        assert!(c.stages.windows(2).all(|w| w[0].t < w[1].t && w[1].ln_eps < w[0].ln_eps));
        for (check, stage) in c.checks.iter().zip(&c.stages) {
            assert!(check.holds, "stage at t = {}", stage.t);
        }
    }

    #[test]
    fn flat_weight_stalls_honestly() {
        let s = Arc::new(
            WeightedGridSpace::new(
                DomainSpec::half_line(60.0).unwrap(),
                &[6000],
                NormMode::Lp(1.0),
                WeightFunction::constant(1.0),
            )
            .unwrap(),
        );
        let fam = CompositionFamily::translation(s.clone()).unwrap();
        let x0 = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let err = nested_ball_construct(&fam, &x0, 0.5, 3, NestedBallConfig { horizon: 50.0, ..Default::default() }).unwrap_err();
        assert!(matches!(err, LabError::ConstructionStalled { stage: 1, truncation_limited: false, .. }));
    }

    #[test]
    fn backward_needs_a_group() {
        let (s, fam) = expdecay();
        let x0 = s.indicator(&BoxRegion::interval(0.0, 1.0).unwrap());
        let cfg = NestedBallConfig { direction: Direction::Backward, ..Default::default() };
        assert!(matches!(nested_ball_construct(&fam, &x0, 0.5, 2, cfg), Err(LabError::Precondition(_))));
    }
}
