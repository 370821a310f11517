use std::fmt;
use std::sync::Arc;

use serde::Serialize;

use crate::spaces::DomainKind;

type MapFn = Arc<dyn Fn(f64, &[f64], &mut [f64]) -> bool + Send + Sync>;
type JacFn = Arc<dyn Fn(f64, &[f64]) -> f64 + Send + Sync>;

/// A semiflow given by closures, for flows outside the closed-form catalog.
#[derive(Clone)]
pub struct CustomFlow {
    pub label: String,
    pub dim: usize,
    pub group_like: bool,
    map: MapFn,
    inverse: Option<MapFn>,
    jac: JacFn,
}

impl CustomFlow {
    pub fn new(
        label: impl Into<String>,
        dim: usize,
        group_like: bool,
        map: impl Fn(f64, &[f64], &mut [f64]) -> bool + Send + Sync + 'static,
        jac: impl Fn(f64, &[f64]) -> f64 + Send + Sync + 'static,
    ) -> Self {
        Self { label: label.into(), dim, group_like, map: Arc::new(map), inverse: None, jac: Arc::new(jac) }
    }

    pub fn with_inverse(mut self, inv: impl Fn(f64, &[f64], &mut [f64]) -> bool + Send + Sync + 'static) -> Self {
        self.inverse = Some(Arc::new(inv));
        self
    }
}

/// A semiflow `phi(t, x)` on a domain of `R^d`.
#[derive(Clone)]
pub enum Semiflow {
    /// `x + t v`; a group on the line, a forward semiflow on the half-line.
    Translation {
        velocity: Vec<f64>,
        domain: DomainKind,
    },
    /// `x e^{rate t}` on `(0, inf)^d`.
    Dilation {
        rate: f64,
        dim: usize,
    },
    /// `e^{a t} x + (b/a)(e^{a t} - 1)` coordinatewise on `R^d`.
    Affine {
        a: f64,
        b: f64,
        dim: usize,
    },
    Custom(CustomFlow),
}

impl fmt::Debug for Semiflow {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

impl Semiflow {
    pub fn translation(dim: usize, domain: DomainKind) -> Self {
        Semiflow::Translation { velocity: vec![1.0; dim], domain }
    }

    pub fn dilation(rate: f64) -> Self {
        Semiflow::Dilation { rate, dim: 1 }
    }

    pub fn affine(a: f64, b: f64) -> Self {
        Semiflow::Affine { a, b, dim: 1 }
    }

    pub fn dim(&self) -> usize {
        match self {
            Semiflow::Translation { velocity, .. } => velocity.len(),
            Semiflow::Dilation { dim, .. } | Semiflow::Affine { dim, .. } => *dim,
            Semiflow::Custom(c) => c.dim,
        }
    }

    pub fn label(&self) -> String {
        match self {
            Semiflow::Translation { velocity, domain } => format!("translation v={velocity:?} on {domain:?}"),
            Semiflow::Dilation { rate, .. } => format!("dilation x*exp({rate} t)"),
            Semiflow::Affine { a, b, .. } => format!("affine a={a} b={b}"),
            Semiflow::Custom(c) => c.label.clone(),
        }
    }

    /// Defined for every real `t`.
    pub fn group_like(&self) -> bool {
        match self {
            Semiflow::Translation { domain, .. } => *domain != DomainKind::HalfLine,
            Semiflow::Dilation { .. } | Semiflow::Affine { .. } => true,
            Semiflow::Custom(c) => c.group_like,
        }
    }

    /// Whether `phi(t, .)` has a closed form, so iterates can be taken exactly.
    pub fn closed_form(&self) -> bool {
        !matches!(self, Semiflow::Custom(_))
    }

    fn time_ok(&self, t: f64) -> bool {
        t.is_finite() && (t >= 0.0 || self.group_like())
    }

    /// Writes `phi(t, x)` into `out`; returns false where the flow is undefined.
    pub fn map(&self, t: f64, x: &[f64], out: &mut [f64]) -> bool {
        if !self.time_ok(t) {
            return false;
        }
        match self {
            Semiflow::Translation { velocity, domain } => {
                if *domain == DomainKind::HalfLine && x.iter().any(|v| *v < 0.0) {
                    return false;
                }
                for ((o, xi), v) in out.iter_mut().zip(x).zip(velocity) {
                    *o = xi + t * v;
                }
                true
            }
            Semiflow::Dilation { rate, .. } => {
                if x.iter().any(|v| !(*v > 0.0)) {
                    return false;
                }
                let s = (rate * t).exp();
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = xi * s;
                }
                true
            }
            Semiflow::Affine { a, b, .. } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    *o = affine_point(*a, *b, t, *xi);
                }
                true
            }
            Semiflow::Custom(c) => (c.map)(t, x, out),
        }
    }

    pub fn map_vec(&self, t: f64, x: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; x.len()];
        self.map(t, x, &mut out).then_some(out)
    }

    /// The unique `x` with `phi(t, x) = y`, if `y` lies in the image.
    pub fn inverse_on_image(&self, t: f64, y: &[f64], out: &mut [f64]) -> bool {
        if !self.time_ok(t) {
            return false;
        }
        match self {
            Semiflow::Translation { velocity, domain } => {
                for ((o, yi), v) in out.iter_mut().zip(y).zip(velocity) {
                    *o = yi - t * v;
                }
                *domain != DomainKind::HalfLine || out.iter().all(|v| *v >= 0.0)
            }
            Semiflow::Dilation { rate, .. } => {
                if y.iter().any(|v| !(*v > 0.0)) {
                    return false;
                }
                let s = (-rate * t).exp();
                for (o, yi) in out.iter_mut().zip(y) {
                    *o = yi * s;
                }
                true
            }
            Semiflow::Affine { a, b, .. } => {
                for (o, yi) in out.iter_mut().zip(y) {
                    *o = affine_point(*a, *b, -t, *yi);
                }
                true
            }
            Semiflow::Custom(c) => match &c.inverse {
                Some(inv) => inv(t, y, out),
                None => false,
            },
        }
    }

    pub fn has_inverse(&self) -> bool {
        match self {
            Semiflow::Custom(c) => c.inverse.is_some(),
            _ => true,
        }
    }

    pub fn inverse_vec(&self, t: f64, y: &[f64]) -> Option<Vec<f64>> {
        let mut out = vec![0.0; y.len()];
        self.inverse_on_image(t, y, &mut out).then_some(out)
    }

    /// Whether `y` lies in `phi(t, Omega)`.
    pub fn image_indicator(&self, t: f64, y: &[f64]) -> bool {
        self.inverse_vec(t, y).is_some()
    }

    /// `det D_x phi(t, x)`.
    pub fn jac_det(&self, t: f64, x: &[f64]) -> f64 {
        match self {
            Semiflow::Translation { .. } => 1.0,
            Semiflow::Dilation { rate, dim } => (rate * t * *dim as f64).exp(),
            Semiflow::Affine { a, dim, .. } => (a * t * *dim as f64).exp(),
            Semiflow::Custom(c) => (c.jac)(t, x),
        }
    }

    /// Membership in the domain `Omega` the flow acts on.
    pub fn in_domain(&self, x: &[f64]) -> bool {
        match self {
            Semiflow::Translation { domain: DomainKind::HalfLine, .. } => x.iter().all(|v| *v >= 0.0),
            Semiflow::Dilation { .. } => x.iter().all(|v| *v > 0.0),
            _ => x.iter().all(|v| v.is_finite()),
        }
    }
}

fn affine_point(a: f64, b: f64, t: f64, x: f64) -> f64 {
    if a == 0.0 {
        x + b * t
    } else {
        let e = (a * t).exp();
        e * x + (b / a) * (e - 1.0)
    }
}

/// Residuals of the semiflow axioms on sample lattices.
#[derive(Debug, Clone, Serialize)]
pub struct SelfCheckReport {
    /// `max |phi(0,x) - x|`
    pub identity: f64,
    /// `max |phi(t+s,x) - phi(t,phi(s,x))| / (1 + |phi(t+s,x)|)`
    pub cocycle: f64,
    /// Sample `(t, s, x)` attaining the cocycle residual.
    pub cocycle_worst: Option<(f64, f64, Vec<f64>)>,
    /// Smallest image distance over distinct sampled points at a fixed `t > 0`.
    pub injectivity: f64,
    /// `max |inverse(t, phi(t,x)) - x| / (1 + |x|)`
    pub inverse: f64,
    /// `max |jac_det(0, x) - 1|`
    pub jacobian_identity: f64,
    pub undefined_samples: usize,
    pub passes: bool,
    pub failures: Vec<String>,
}

const SELFCHECK_TOL: f64 = 1e-9;

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt()
}

fn mag(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Checks identity, cocycle law, injectivity and inverse consistency.
pub fn semiflow_selfcheck(phi: &Semiflow, t_samples: &[f64], s_samples: &[f64], x_samples: &[Vec<f64>]) -> SelfCheckReport {
    let mut identity: f64 = 0.0;
    let mut jacobian_identity: f64 = 0.0;
    let mut undefined = 0;
    for x in x_samples {
        match phi.map_vec(0.0, x) {
            Some(y) => identity = identity.max(dist(&y, x)),
            None => undefined += 1,
        }
        jacobian_identity = jacobian_identity.max((phi.jac_det(0.0, x) - 1.0).abs());
    }

    let mut cocycle: f64 = 0.0;
    let mut cocycle_worst = None;
    for &t in t_samples {
        for &s in s_samples {
            for x in x_samples {
                let (Some(lhs), Some(mid)) = (phi.map_vec(t + s, x), phi.map_vec(s, x)) else {
                    undefined += 1;
                    continue;
                };
                let Some(rhs) = phi.map_vec(t, &mid) else {
                    undefined += 1;
                    continue;
                };
                let r = dist(&lhs, &rhs) / (1.0 + mag(&lhs));
                if r > cocycle || cocycle_worst.is_none() {
                    cocycle = cocycle.max(r);
                    cocycle_worst = Some((t, s, x.clone()));
                }
            }
        }
    }

    let mut injectivity = f64::INFINITY;
    let mut inverse: f64 = 0.0;
    for &t in t_samples.iter().filter(|t| **t > 0.0) {
        let images: Vec<Option<Vec<f64>>> = x_samples.iter().map(|x| phi.map_vec(t, x)).collect();
        for i in 0..x_samples.len() {
            let Some(yi) = &images[i] else { continue };
            for j in (i + 1)..x_samples.len() {
                if let Some(yj) = &images[j] {
                    if dist(&x_samples[i], &x_samples[j]) > 0.0 {
                        injectivity = injectivity.min(dist(yi, yj));
                    }
                }
            }
            if phi.has_inverse() {
                match phi.inverse_vec(t, yi) {
                    Some(back) => inverse = inverse.max(dist(&back, &x_samples[i]) / (1.0 + mag(&x_samples[i]))),
                    None => inverse = f64::INFINITY,
                }
            }
        }
    }

    let mut failures = Vec::new();
    if identity > SELFCHECK_TOL {
        failures.push(format!("identity residual {identity:e}"));
    }
    if jacobian_identity > SELFCHECK_TOL {
        failures.push(format!("jacobian at t=0 differs from 1 by {jacobian_identity:e}"));
    }
    if cocycle > SELFCHECK_TOL {
        failures.push(format!("cocycle residual {cocycle:e} at {cocycle_worst:?}"));
    }
    if injectivity == 0.0 {
        failures.push("distinct samples share an image".into());
    }
    if inverse > SELFCHECK_TOL {
        failures.push(format!("inverse residual {inverse:e}"));
    }
    SelfCheckReport {
        identity,
        cocycle,
        cocycle_worst,
        injectivity,
        inverse,
        jacobian_identity,
        undefined_samples: undefined,
        passes: failures.is_empty(),
        failures,
    }
}
