use rayon::prelude::*;

use super::verdict::{dips_below, CriterionKind, CriterionVerdict, Evidence};
use crate::error::{LabError, Result};
use crate::recurrence::{lattice_times, Direction};
use crate::spaces::{AdmissibilityCertificate, CertificateKind, DomainKind, DomainSpec, WeightFunction};

const WINDOW_SAMPLES: usize = 33;

/// Left translation on the half-line: recurrent iff `lim inf rho(x) = 0`.
/// Evidence is the minimum of `rho` over `[X, X + window]` for `X` stepping by `window`.
pub fn liminf_criterion_halfline(
    rho: &WeightFunction,
    domain: &DomainSpec,
    certificate: Option<&AdmissibilityCertificate>,
    horizon: f64,
    window: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    if domain.kind != DomainKind::HalfLine {
        return Err(LabError::Precondition("liminf criterion needs a half-line domain".into()));
    }
    match certificate {
        Some(c) if c.kind == CertificateKind::ScalarWeight && c.holds => {}
        Some(_) => return Err(LabError::Precondition("weight admissibility certificate does not hold".into())),
        None => return Err(LabError::Precondition("weight admissibility certificate required".into())),
    }
    if !(window > 0.0 && horizon > window) {
        return Err(LabError::InvalidParameter("need 0 < window < horizon".into()));
    }
    let starts: Vec<f64> = std::iter::once(0.0).chain(lattice_times(window, horizon - window)).collect();
    let minima: Vec<(f64, f64)> = starts
        .par_iter()
        .map(|&x0| {
            let ln_min = (0..WINDOW_SAMPLES)
                .map(|k| rho.ln_eval(&[x0 + window * k as f64 / (WINDOW_SAMPLES - 1) as f64]))
                .fold(f64::INFINITY, f64::min);
            (x0, ln_min.exp())
        })
        .collect();
    Ok(CriterionVerdict {
        criterion: CriterionKind::LimInfHalfLine,
        holds: dips_below(&minima, tol),
        evidence: minima.iter().map(|&(x, v)| Evidence::new("window_min_rho", x, v)).collect(),
        horizon,
        tol,
        direction: Some(Direction::Forward),
        notes: vec![format!("window {window}; minima sampled at {WINDOW_SAMPLES} points")],
    })
}

/// Left translation on the line, one direction: for every sampled `x`,
/// `rho(x + t)` (forward) or `rho(x - t)` (backward) dips below `tol`.
pub fn pointwise_decay_criterion_line(
    rho: &WeightFunction,
    domain: &DomainSpec,
    x_samples: &[f64],
    horizon: f64,
    step: f64,
    direction: Direction,
    tol: f64,
) -> Result<CriterionVerdict> {
    if domain.kind != DomainKind::Line {
        return Err(LabError::Precondition("pointwise decay criterion needs a line domain".into()));
    }
    if x_samples.is_empty() {
        return Err(LabError::InvalidParameter("no sample points".into()));
    }
    let sign = if direction == Direction::Forward { 1.0 } else { -1.0 };
    let times = lattice_times(step, horizon);
    let per_point: Vec<(f64, bool, f64)> = x_samples
        .par_iter()
        .map(|&x| {
            let curve: Vec<(f64, f64)> = times.iter().map(|&t| (t, rho.ln_eval(&[x + sign * t]).exp())).collect();
            let min = curve.iter().map(|c| c.1).fold(f64::INFINITY, f64::min);
            (x, dips_below(&curve, tol), min)
        })
        .collect();
    let failing: Vec<f64> = per_point.iter().filter(|p| !p.1).map(|p| p.0).collect();
    let mut notes = vec![format!("{} sample points, time step {step}", x_samples.len())];
    if !failing.is_empty() {
        notes.push(format!("no decay at x = {failing:?}"));
    }
    Ok(CriterionVerdict {
        criterion: CriterionKind::PointwiseDecayLine,
        holds: failing.is_empty(),
        evidence: per_point.iter().map(|&(x, _, m)| Evidence::new("min_rho_along_orbit", x, m)).collect(),
        horizon,
        tol,
        direction: Some(direction),
        notes,
    })
}

/// Both directions at once: the verdict used for line instances.
pub fn two_sided_decay_criterion_line(
    rho: &WeightFunction,
    domain: &DomainSpec,
    x_samples: &[f64],
    horizon: f64,
    step: f64,
    tol: f64,
) -> Result<CriterionVerdict> {
    let fwd = pointwise_decay_criterion_line(rho, domain, x_samples, horizon, step, Direction::Forward, tol)?;
    let bwd = pointwise_decay_criterion_line(rho, domain, x_samples, horizon, step, Direction::Backward, tol)?;
    Ok(fwd.and(bwd))
}
