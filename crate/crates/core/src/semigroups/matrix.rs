use std::sync::Arc;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use super::family::OperatorFamily;
use crate::error::{LabError, Result};
use crate::spaces::{NormMode, SpaceId, WeightedGridSpace};

pub const DEFAULT_MATRIX_CAP: usize = 4096;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Dense matrix of a family's operator at time `t` in the grid basis.
#[derive(Debug, Clone)]
pub struct OperatorMatrix {
    /// Row-major `n x n`.
    entries: Vec<Complex64>,
    n: usize,
    pub t: f64,
    space: Arc<WeightedGridSpace>,
}

/// Column `j` is `apply(t, e_j)`.
pub fn assemble_matrix(family: &dyn OperatorFamily, t: f64, cap: usize) -> Result<OperatorMatrix> {
    let state = family.state_space();
    let space =
        state.grid().ok_or_else(|| LabError::InvalidParameter("matrix assembly needs a single grid space".into()))?.clone();
    let n = space.len();
    if n > cap {
        return Err(LabError::SizeCapExceeded { size: n, cap });
    }
    let columns: Vec<Vec<Complex64>> =
        (0..n).into_par_iter().map(|j| family.apply(t, &state.basis(j)).map(|a| a.value.values)).collect::<Result<_>>()?;
    let mut entries = vec![ZERO; n * n];
    for (j, col) in columns.iter().enumerate() {
        for (i, v) in col.iter().enumerate() {
            entries[i * n + j] = *v;
        }
    }
    Ok(OperatorMatrix { entries, n, t, space })
}

impl OperatorMatrix {
    pub fn from_entries(space: Arc<WeightedGridSpace>, t: f64, entries: Vec<Complex64>) -> Result<Self> {
        let n = space.len();
        if entries.len() != n * n {
            return Err(LabError::DimensionMismatch { expected: n * n, got: entries.len() });
        }
        Ok(Self { entries, n, t, space })
    }

    pub fn identity(space: Arc<WeightedGridSpace>) -> Self {
        let n = space.len();
        let mut entries = vec![ZERO; n * n];
        for i in 0..n {
            entries[i * n + i] = ONE;
        }
        Self { entries, n, t: 0.0, space }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn space(&self) -> &Arc<WeightedGridSpace> {
        &self.space
    }

    pub fn space_id(&self) -> SpaceId {
        self.space.id()
    }

    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn mul_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let go = |i: usize| self.row(i).iter().zip(v).map(|(a, b)| a * b).sum();
        if self.n >= 512 {
            (0..self.n).into_par_iter().map(go).collect()
        } else {
            (0..self.n).map(go).collect()
        }
    }

    /// `M^H v`
    pub fn mul_adjoint_vec(&self, v: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![ZERO; self.n];
        for (i, vi) in v.iter().enumerate() {
            if *vi == ZERO {
                continue;
            }
            for (o, a) in out.iter_mut().zip(self.row(i)) {
                *o += a.conj() * vi;
            }
        }
        out
    }

    pub fn minus_identity(&self) -> Self {
        let mut m = self.clone();
        for i in 0..self.n {
            m.entries[i * self.n + i] -= ONE;
        }
        m
    }

    pub fn scaled(&self, c: Complex64) -> Self {
        let mut m = self.clone();
        m.entries.iter_mut().for_each(|v| *v *= c);
        m
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.n).all(|i| self.row(i).iter().enumerate().all(|(j, v)| i == j || *v == ZERO))
    }

    fn check_finite(&self) -> Result<()> {
        match self.entries.iter().position(|v| !v.re.is_finite() || !v.im.is_finite()) {
            Some(k) => Err(LabError::Numeric(format!("non-finite matrix entry at {k}"))),
            None => Ok(()),
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct SpectralEstimate {
    pub r: f64,
    pub converged: bool,
    pub iterations: usize,
}

/// Power iteration in the space's weighted norm. A vector annihilated by a
/// power of the matrix gives `r = 0`.
pub fn spectral_radius_estimate(m: &OperatorMatrix, iters: usize, tol: f64) -> Result<SpectralEstimate> {
    m.check_finite()?;
    let space = &m.space;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut v: Vec<Complex64> = (0..m.n).map(|_| Complex64::new(rng.gen_range(0.5..1.5), rng.gen_range(-0.5..0.5))).collect();
    let nv = space.norm_values(&v);
    v.iter_mut().for_each(|x| *x /= nv);
    let mut history: Vec<f64> = Vec::new();
    for k in 0..iters {
        let w = m.mul_vec(&v);
        let nw = space.norm_values(&w);
        if !nw.is_finite() {
            return Err(LabError::Numeric(format!("power iteration overflowed at step {k}")));
        }
        if nw == 0.0 {
            return Ok(SpectralEstimate { r: 0.0, converged: true, iterations: k + 1 });
        }
        history.push(nw);
        v = w.into_iter().map(|x| x / nw).collect();
        if history.len() > 10 {
            let tail = &history[history.len() - 11..];
            let last = *tail.last().unwrap();
            if tail.iter().all(|r| (r - last).abs() <= tol * last) {
                return Ok(SpectralEstimate { r: last, converged: true, iterations: k + 1 });
            }
        }
    }
    Ok(SpectralEstimate { r: history.last().copied().unwrap_or(0.0), converged: false, iterations: iters })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum NormMethod {
    /// Diagonal matrix: `max |d_i|`.
    DiagonalExact,
    /// Weighted `L^1`: maximal weighted column sum.
    ColumnSumExact,
    /// Weighted sup: maximal weighted row sum.
    RowSumExact,
    /// `p = 2`: power iteration on the reweighted Gram matrix.
    GramPower,
    /// General `p`: Boyd's nonlinear power method.
    BoydPower,
}

#[derive(Debug, Clone, Copy, Serialize)]
pub struct NormBounds {
    /// Attained by an explicit vector.
    pub lower: f64,
    /// Rigorous upper bound.
    pub upper: f64,
    pub method: NormMethod,
}

/// `sup_{||f|| <= 1} ||M f||` in the space's weighted norm.
pub fn operator_norm_estimate(m: &OperatorMatrix) -> Result<f64> {
    Ok(operator_norm_bounds(m)?.lower)
}

pub fn operator_norm_bounds(m: &OperatorMatrix) -> Result<NormBounds> {
    m.check_finite()?;
    let n = m.n;
    if m.is_diagonal() {
        let v = (0..n).map(|i| m.get(i, i).norm()).fold(0.0, f64::max);
        return Ok(NormBounds { lower: v, upper: v, method: NormMethod::DiagonalExact });
    }
    match m.space.mode() {
        NormMode::C0Sup => {
            let v = (0..n)
                .map(|i| m.row(i).iter().enumerate().map(|(j, a)| a.norm() * m.space.weight_ratio(i, j)).sum::<f64>())
                .fold(0.0, f64::max);
            Ok(NormBounds { lower: v, upper: v, method: NormMethod::RowSumExact })
        }
        NormMode::Lp(p) => {
            // B = D^{1/p} M D^{-1/p} acts on plain l^p with the same norm.
            let ln_scale: Vec<f64> = m.space.ln_measure().iter().map(|x| x / p).collect();
            let b: Vec<Complex64> = (0..n * n).map(|k| m.entries[k] * (ln_scale[k / n] - ln_scale[k % n]).exp()).collect();
            let l1 = (0..n).map(|j| (0..n).map(|i| b[i * n + j].norm()).sum::<f64>()).fold(0.0, f64::max);
            if p == 1.0 {
                return Ok(NormBounds { lower: l1, upper: l1, method: NormMethod::ColumnSumExact });
            }
            let linf = (0..n).map(|i| b[i * n..(i + 1) * n].iter().map(|a| a.norm()).sum::<f64>()).fold(0.0, f64::max);
            let upper = l1.powf(1.0 / p) * linf.powf(1.0 - 1.0 / p);
            let bm = OperatorMatrix { entries: b, n, t: m.t, space: m.space.clone() };
            let (lower, method) =
                if p == 2.0 { (gram_power(&bm), NormMethod::GramPower) } else { (boyd_power(&bm, p), NormMethod::BoydPower) };
            Ok(NormBounds { lower: lower.min(upper), upper, method })
        }
    }
}

fn lp(v: &[Complex64], p: f64) -> f64 {
    v.iter().map(|x| x.norm().powf(p)).sum::<f64>().powf(1.0 / p)
}

fn starts(n: usize) -> Vec<Vec<Complex64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xb0d);
    let mut out = vec![vec![ONE; n]];
    for _ in 0..3 {
        out.push((0..n).map(|_| Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))).collect());
    }
    out
}

/// Largest singular value of `b` on plain `l^2`.
fn gram_power(b: &OperatorMatrix) -> f64 {
    let mut best: f64 = 0.0;
    for mut v in starts(b.n) {
        let mut prev = 0.0;
        for _ in 0..2000 {
            let nv = lp(&v, 2.0);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let bv = b.mul_vec(&v);
            let s = lp(&bv, 2.0);
            best = best.max(s);
            if (s - prev).abs() <= 1e-14 * s {
                break;
            }
            prev = s;
            v = b.mul_adjoint_vec(&bv);
        }
    }
    best
}

fn duality(v: &[Complex64], p: f64) -> Vec<Complex64> {
    v.iter()
        .map(|x| {
            let a = x.norm();
            if a == 0.0 {
                ZERO
            } else {
                x * a.powf(p - 2.0)
            }
        })
        .collect()
}

/// Boyd's iteration for `||b||_{p -> p}`; every iterate is a valid lower bound.
fn boyd_power(b: &OperatorMatrix, p: f64) -> f64 {
    let q = p / (p - 1.0);
    let mut best: f64 = 0.0;
    for mut v in starts(b.n) {
        let mut prev = 0.0;
        for _ in 0..1000 {
            let nv = lp(&v, p);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let bv = b.mul_vec(&v);
            let s = lp(&bv, p);
            best = best.max(s);
            if (s - prev).abs() <= 1e-13 * s {
                break;
            }
            prev = s;
            let w = b.mul_adjoint_vec(&duality(&bv, p));
            v = duality(&w, q);
        }
    }
    best
}
