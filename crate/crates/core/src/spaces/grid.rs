use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::domain::{DomainKind, DomainSpec};
use super::weight::WeightFunction;
use crate::error::{LabError, Result};

/// Largest supported spatial dimension.
pub const MAX_DIM: usize = 3;

/// Off-grid reads closer than this (in index units) to a node snap onto it,
/// which makes grid-aligned shifts exact copies.
const SNAP: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum NormMode {
    /// `(int |u|^p rho)^{1/p}`
    Lp(f64),
    /// `sup |u| rho`
    C0Sup,
}

impl NormMode {
    pub fn label(&self) -> String {
        match self {
            NormMode::Lp(p) => format!("L^{p}"),
            NormMode::C0Sup => "C0".into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SpaceId(pub u64);

/// One uniform axis of midpoint nodes `low + (i + 1/2) h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Axis {
    pub low: f64,
    pub h: f64,
    pub n: usize,
}

impl Axis {
    pub fn node(&self, i: usize) -> f64 {
        self.low + (i as f64 + 0.5) * self.h
    }

    pub fn high(&self) -> f64 {
        self.low + self.n as f64 * self.h
    }
}

/// Linear-interpolation weights for a read at an arbitrary point.
#[derive(Debug, Clone, Copy)]
pub struct Stencil {
    entries: [(usize, f64); 1 << MAX_DIM],
    len: usize,
}

impl Stencil {
    pub fn entries(&self) -> &[(usize, f64)] {
        &self.entries[..self.len]
    }

    pub fn is_node(&self) -> bool {
        self.len == 1
    }

    pub fn read(&self, values: &[Complex64]) -> Complex64 {
        if self.len == 1 {
            let (j, w) = self.entries[0];
            return if w == 1.0 { values[j] } else { values[j] * w };
        }
        self.entries().iter().map(|&(j, w)| values[j] * w).sum()
    }
}

/// A discretized `L^p_rho` or `C_{0,rho}` space on a tensor grid of
/// midpoint nodes covering the truncated window of its domain.
#[derive(Debug, Clone)]
pub struct WeightedGridSpace {
    domain: DomainSpec,
    axes: Vec<Axis>,
    mode: NormMode,
    weight: WeightFunction,
    weight_samples: Vec<f64>,
    ln_weight_samples: Vec<f64>,
    quad_weights: Vec<f64>,
    id: SpaceId,
}

impl WeightedGridSpace {
    pub fn new(domain: DomainSpec, points_per_axis: &[usize], mode: NormMode, weight: WeightFunction) -> Result<Self> {
        let dim = domain.dim();
        if dim > MAX_DIM {
            return Err(LabError::InvalidDomain(format!("dimension {dim} exceeds {MAX_DIM}")));
        }
        if points_per_axis.len() != dim {
            return Err(LabError::DimensionMismatch { expected: dim, got: points_per_axis.len() });
        }
        if let NormMode::Lp(p) = mode {
            if !(p >= 1.0) || !p.is_finite() {
                return Err(LabError::InvalidParameter(format!("p must satisfy p >= 1, got {p}")));
            }
        }
        let axes: Vec<Axis> = points_per_axis
            .iter()
            .enumerate()
            .map(|(a, &n)| {
                let (l, h) = domain.window_axis(a);
                Axis { low: l, h: (h - l) / n as f64, n }
            })
            .collect();
        if axes.iter().any(|a| a.n == 0) {
            return Err(LabError::InvalidParameter("every axis needs at least one grid point".into()));
        }
        let total: usize = axes.iter().map(|a| a.n).product();
        let cell: f64 = axes.iter().map(|a| a.h).product();
        // Positivity is checked in log form: far tails of decaying weights may
        // underflow as plain floats while their logs stay exact.
        let mut ln_weight_samples = Vec::with_capacity(total);
        let mut x = vec![0.0; dim];
        for i in 0..total {
            fill_point(&axes, i, &mut x);
            ln_weight_samples.push(weight.ln_eval_checked(&x)?);
        }
        let weight_samples = ln_weight_samples.iter().map(|v| v.exp()).collect();
        let quad_weights = vec![cell; total];
        let id = fingerprint(&domain, &axes, mode, &weight.label, &ln_weight_samples);
        Ok(Self { domain, axes, mode, weight, weight_samples, ln_weight_samples, quad_weights, id })
    }

    /// `C^n` with unit weights: nodes `0.5, 1.5, ...` with unit spacing, so the
    /// `L^p` mode is the plain `l^p` norm.
    pub fn sequence(n: usize, mode: NormMode) -> Result<Self> {
        let domain = DomainSpec::open_box(vec![(0.0, n as f64)], 1.0)?;
        Self::new(domain, &[n], mode, WeightFunction::constant(1.0))
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn domain(&self) -> &DomainSpec {
        &self.domain
    }

    pub fn axes(&self) -> &[Axis] {
        &self.axes
    }

    pub fn mode(&self) -> NormMode {
        self.mode
    }

    pub fn weight(&self) -> &WeightFunction {
        &self.weight
    }

    pub fn weight_samples(&self) -> &[f64] {
        &self.weight_samples
    }

    /// `ln rho` at the grid points; finite even where `rho` underflows.
    pub fn ln_weight_samples(&self) -> &[f64] {
        &self.ln_weight_samples
    }

    /// `ln(rho_i w_i)`, the log of the discrete measure.
    pub fn ln_measure(&self) -> Vec<f64> {
        self.ln_weight_samples.iter().zip(&self.quad_weights).map(|(r, w)| r + w.ln()).collect()
    }

    pub fn quad_weights(&self) -> &[f64] {
        &self.quad_weights
    }

    pub fn dim(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.weight_samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weight_samples.is_empty()
    }

    /// Smallest grid spacing.
    pub fn h(&self) -> f64 {
        self.axes.iter().map(|a| a.h).fold(f64::INFINITY, f64::min)
    }

    pub fn point_into(&self, i: usize, out: &mut [f64]) {
        fill_point(&self.axes, i, out);
    }

    pub fn point(&self, i: usize) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        self.point_into(i, &mut x);
        x
    }

    pub fn points(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.point(i))
    }

    /// Interpolation stencil for a read at `z`; `None` outside the window.
    pub fn stencil(&self, z: &[f64]) -> Option<Stencil> {
        let mut st = Stencil { entries: [(0, 0.0); 1 << MAX_DIM], len: 1 };
        st.entries[0] = (0, 1.0);
        let mut stride = 1usize;
        for a in (0..self.axes.len()).rev() {
            let ax = &self.axes[a];
            let v = z[a];
            if !(v >= ax.low && v <= ax.high()) {
                return None;
            }
            let s = ((v - ax.low) / ax.h - 0.5).clamp(0.0, (ax.n - 1) as f64);
            let r = s.round();
            let (lo, frac) = if (s - r).abs() < SNAP { (r as usize, 0.0) } else { (s.floor() as usize, s - s.floor()) };
            let len = st.len;
            if frac == 0.0 {
                for k in 0..len {
                    st.entries[k].0 += lo * stride;
                }
            } else {
                for k in 0..len {
                    let (j, w) = st.entries[k];
                    st.entries[k] = (j + lo * stride, w * (1.0 - frac));
                    st.entries[k + len] = (j + (lo + 1) * stride, w * frac);
                }
                st.len = 2 * len;
            }
            stride *= ax.n;
        }
        Some(st)
    }

    /// Linear interpolation of grid values at `z`; zero outside the window.
    pub fn interpolate(&self, values: &[Complex64], z: &[f64]) -> Complex64 {
        self.stencil(z).map_or(Complex64::new(0.0, 0.0), |s| s.read(values))
    }

    pub fn zeros(&self) -> GridFunction {
        GridFunction { values: vec![Complex64::new(0.0, 0.0); self.len()], space_id: self.id }
    }

    pub fn function(&self, values: Vec<Complex64>) -> Result<GridFunction> {
        GridFunction::new(self.id, self.len(), values)
    }

    pub fn from_fn(&self, mut f: impl FnMut(&[f64]) -> Complex64) -> GridFunction {
        let values = self.points().map(|x| f(&x)).collect();
        GridFunction { values, space_id: self.id }
    }

    pub fn from_real_fn(&self, f: impl Fn(&[f64]) -> f64) -> GridFunction {
        self.from_fn(|x| Complex64::new(f(x), 0.0))
    }

    /// Indicator of a box.
    pub fn indicator(&self, region: &super::BoxRegion) -> GridFunction {
        self.from_real_fn(|x| if region.contains(x) { 1.0 } else { 0.0 })
    }

    pub fn basis(&self, j: usize) -> GridFunction {
        let mut f = self.zeros();
        f.values[j] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn check(&self, f: &GridFunction) -> Result<()> {
        if f.space_id != self.id {
            return Err(LabError::SpaceMismatch { expected: self.id.0, found: f.space_id.0 });
        }
        if f.values.len() != self.len() {
            return Err(LabError::DimensionMismatch { expected: self.len(), got: f.values.len() });
        }
        Ok(())
    }

    /// `rho_i / rho_j` computed from logs.
    pub fn weight_ratio(&self, i: usize, j: usize) -> f64 {
        (self.ln_weight_samples[i] - self.ln_weight_samples[j]).exp()
    }

    /// Weighted norm of raw values, without a space check.
    pub fn norm_values(&self, values: &[Complex64]) -> f64 {
        match self.mode {
            NormMode::Lp(p) => {
                let sum: f64 = if p == 1.0 {
                    values.iter().zip(&self.weight_samples).zip(&self.quad_weights).map(|((v, r), w)| v.norm() * r * w).sum()
                } else {
                    values
                        .iter()
                        .zip(&self.weight_samples)
                        .zip(&self.quad_weights)
                        .map(|((v, r), w)| v.norm().powf(p) * r * w)
                        .sum()
                };
                if p == 1.0 {
                    sum
                } else {
                    sum.powf(1.0 / p)
                }
            }
            NormMode::C0Sup => values.iter().zip(&self.weight_samples).map(|(v, r)| v.norm() * r).fold(0.0, f64::max),
        }
    }

    pub fn norm(&self, f: &GridFunction) -> Result<f64> {
        self.check(f)?;
        Ok(self.norm_values(&f.values))
    }

    pub fn distance(&self, f: &GridFunction, g: &GridFunction) -> Result<f64> {
        self.check(f)?;
        self.check(g)?;
        Ok(self.distance_values(&f.values, &g.values))
    }

    pub fn distance_values(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        match self.mode {
            NormMode::Lp(p) => {
                let sum: f64 = f
                    .iter()
                    .zip(g)
                    .zip(self.weight_samples.iter().zip(&self.quad_weights))
                    .map(|((a, b), (r, w))| {
                        let d = (a - b).norm();
                        if p == 1.0 {
                            d * r * w
                        } else {
                            d.powf(p) * r * w
                        }
                    })
                    .sum();
                if p == 1.0 {
                    sum
                } else {
                    sum.powf(1.0 / p)
                }
            }
            NormMode::C0Sup => {
                f.iter().zip(g).zip(&self.weight_samples).map(|((a, b), r)| (a - b).norm() * r).fold(0.0, f64::max)
            }
        }
    }

    /// Whether nonzero mass of a function on this grid can live at the
    /// point `x` (i.e. `x` lies in the domain but beyond the window).
    pub fn beyond_window_in_domain(&self, x: &[f64]) -> bool {
        self.domain.contains(x) && !self.domain.in_window(x)
    }

    pub fn is_half_line(&self) -> bool {
        self.domain.kind == DomainKind::HalfLine
    }
}

/// Norm of `f` in `space`.
pub fn norm(space: &WeightedGridSpace, f: &GridFunction) -> Result<f64> {
    space.norm(f)
}

/// `norm(space, f - g)`.
pub fn distance(space: &WeightedGridSpace, f: &GridFunction, g: &GridFunction) -> Result<f64> {
    space.distance(f, g)
}

fn fill_point(axes: &[Axis], mut i: usize, out: &mut [f64]) {
    for a in (0..axes.len()).rev() {
        let n = axes[a].n;
        out[a] = axes[a].node(i % n);
        i /= n;
    }
}

fn fingerprint(domain: &DomainSpec, axes: &[Axis], mode: NormMode, label: &str, samples: &[f64]) -> SpaceId {
    let mut h = DefaultHasher::new();
    format!("{:?}", domain.kind).hash(&mut h);
    for (l, u) in &domain.bounds {
        l.to_bits().hash(&mut h);
        u.to_bits().hash(&mut h);
    }
    domain.trunc.to_bits().hash(&mut h);
    for a in axes {
        a.low.to_bits().hash(&mut h);
        a.h.to_bits().hash(&mut h);
        a.n.hash(&mut h);
    }
    match mode {
        NormMode::Lp(p) => {
            0u8.hash(&mut h);
            p.to_bits().hash(&mut h);
        }
        NormMode::C0Sup => 1u8.hash(&mut h),
    }
    label.hash(&mut h);
    for s in samples {
        s.to_bits().hash(&mut h);
    }
    SpaceId(h.finish())
}

/// Complex samples of a function on a grid space.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    pub values: Vec<Complex64>,
    pub space_id: SpaceId,
}

impl GridFunction {
    pub fn new(space_id: SpaceId, expected_len: usize, values: Vec<Complex64>) -> Result<Self> {
        if values.len() != expected_len {
            return Err(LabError::DimensionMismatch { expected: expected_len, got: values.len() });
        }
        if let Some(i) = values.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            return Err(LabError::NonFinite(i));
        }
        Ok(Self { values, space_id })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    fn same_space(&self, other: &GridFunction) -> Result<()> {
        if self.space_id != other.space_id {
            return Err(LabError::SpaceMismatch { expected: self.space_id.0, found: other.space_id.0 });
        }
        if self.values.len() != other.values.len() {
            return Err(LabError::DimensionMismatch { expected: self.values.len(), got: other.values.len() });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a + b).collect();
        Ok(GridFunction { values, space_id: self.space_id })
    }

    pub fn try_sub(&self, other: &GridFunction) -> Result<GridFunction> {
        self.same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| a - b).collect();
        Ok(GridFunction { values, space_id: self.space_id })
    }

    pub fn scaled(&self, alpha: Complex64) -> GridFunction {
        GridFunction { values: self.values.iter().map(|v| v * alpha).collect(), space_id: self.space_id }
    }

    /// `alpha * self + beta * other`
    pub fn combine(&self, alpha: Complex64, other: &GridFunction, beta: Complex64) -> Result<GridFunction> {
        self.same_space(other)?;
        let values = self.values.iter().zip(&other.values).map(|(a, b)| alpha * a + beta * b).collect();
        Ok(GridFunction { values, space_id: self.space_id })
    }

    pub fn is_zero(&self) -> bool {
        self.values.iter().all(|v| v.re == 0.0 && v.im == 0.0)
    }
}
