use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Default truncation of unbounded directions.
pub const DEFAULT_TRUNC: f64 = 200.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DomainKind {
    /// `[0, inf)` in every coordinate.
    HalfLine,
    /// The whole of `R^d`.
    Line,
    /// A product of open intervals, each end possibly infinite.
    OpenBox,
}

/// An axis-aligned closed box, used for compact sets and windows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoxRegion {
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

impl BoxRegion {
    pub fn new(low: Vec<f64>, high: Vec<f64>) -> Result<Self> {
        if low.len() != high.len() || low.is_empty() {
            return Err(LabError::InvalidDomain(format!("box bounds have mismatched lengths {} and {}", low.len(), high.len())));
        }
        for (l, h) in low.iter().zip(&high) {
            if !(l < h) || !l.is_finite() || !h.is_finite() {
                return Err(LabError::InvalidDomain(format!("box side [{l}, {h}] is not a finite interval")));
            }
        }
        Ok(Self { low, high })
    }

    pub fn interval(low: f64, high: f64) -> Result<Self> {
        Self::new(vec![low], vec![high])
    }

    pub fn dim(&self) -> usize {
        self.low.len()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(self.low.iter().zip(&self.high)).all(|(v, (l, h))| *l <= *v && *v <= *h)
    }

    pub fn volume(&self) -> f64 {
        self.low.iter().zip(&self.high).map(|(l, h)| h - l).product()
    }

    /// Midpoint nodes with spacing close to `step` along every axis.
    /// Boxes whose side lengths are multiples of `step` share nodes with their unions.
    pub fn midpoint_nodes(&self, step: f64) -> (Vec<Vec<f64>>, f64) {
        let counts: Vec<usize> =
            self.low.iter().zip(&self.high).map(|(l, h)| (((h - l) / step).round() as usize).max(1)).collect();
        let spacing: Vec<f64> = self.low.iter().zip(&self.high).zip(&counts).map(|((l, h), n)| (h - l) / *n as f64).collect();
        let cell: f64 = spacing.iter().product();
        let total: usize = counts.iter().product();
        let mut nodes = Vec::with_capacity(total);
        let mut idx = vec![0usize; counts.len()];
        for _ in 0..total {
            nodes.push(idx.iter().enumerate().map(|(a, &i)| self.low[a] + (i as f64 + 0.5) * spacing[a]).collect());
            for a in (0..counts.len()).rev() {
                idx[a] += 1;
                if idx[a] < counts[a] {
                    break;
                }
                idx[a] = 0;
            }
        }
        (nodes, cell)
    }
}

/// The (possibly unbounded) domain of a weighted function space together
/// with the truncation used to discretize it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DomainSpec {
    pub kind: DomainKind,
    /// `(low, high)` per dimension; infinite ends are allowed for `OpenBox`.
    pub bounds: Vec<(f64, f64)>,
    pub trunc: f64,
}

impl DomainSpec {
    pub fn half_line(trunc: f64) -> Result<Self> {
        Self::new(DomainKind::HalfLine, vec![(0.0, f64::INFINITY)], trunc)
    }

    pub fn line(trunc: f64) -> Result<Self> {
        Self::new(DomainKind::Line, vec![(f64::NEG_INFINITY, f64::INFINITY)], trunc)
    }

    pub fn open_box(bounds: Vec<(f64, f64)>, trunc: f64) -> Result<Self> {
        Self::new(DomainKind::OpenBox, bounds, trunc)
    }

    pub fn new(kind: DomainKind, bounds: Vec<(f64, f64)>, trunc: f64) -> Result<Self> {
        if bounds.is_empty() {
            return Err(LabError::InvalidDomain("domain needs at least one dimension".into()));
        }
        let bounds = match kind {
            DomainKind::HalfLine => vec![(0.0, f64::INFINITY); bounds.len()],
            DomainKind::Line => vec![(f64::NEG_INFINITY, f64::INFINITY); bounds.len()],
            DomainKind::OpenBox => bounds,
        };
        for &(l, h) in &bounds {
            if !(l < h) || l.is_nan() || h.is_nan() {
                return Err(LabError::InvalidDomain(format!("bounds ({l}, {h}) need low < high")));
            }
        }
        let unbounded = bounds.iter().any(|(l, h)| l.is_infinite() || h.is_infinite());
        if unbounded && !(trunc > 0.0 && trunc.is_finite()) {
            return Err(LabError::InvalidDomain(format!("trunc must be positive for unbounded domains, got {trunc}")));
        }
        let spec = Self { kind, bounds, trunc };
        for a in 0..spec.dim() {
            let (l, h) = spec.window_axis(a);
            if !(l < h) {
                return Err(LabError::InvalidDomain(format!("truncated window ({l}, {h}) is empty on axis {a}")));
            }
        }
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.bounds.len()
    }

    pub fn window_axis(&self, axis: usize) -> (f64, f64) {
        let (l, h) = self.bounds[axis];
        let l = if l.is_infinite() { -self.trunc } else { l };
        let h = if h.is_infinite() { self.trunc } else { h };
        (l, h)
    }

    /// The truncated computational window.
    pub fn window(&self) -> BoxRegion {
        let (low, high) = (0..self.dim()).map(|a| self.window_axis(a)).unzip();
        BoxRegion { low, high }
    }

    /// Membership in the untruncated domain.
    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.bounds).all(|(v, &(l, h))| match self.kind {
            DomainKind::HalfLine => *v >= 0.0,
            DomainKind::Line => v.is_finite(),
            DomainKind::OpenBox => l < *v && *v < h,
        })
    }

    pub fn in_window(&self, x: &[f64]) -> bool {
        (0..self.dim()).all(|a| {
            let (l, h) = self.window_axis(a);
            l <= x[a] && x[a] <= h
        })
    }

    /// Whether the window edge on `axis` (`upper` or lower) is an artificial
    /// truncation or an open boundary of the domain, as opposed to a closed
    /// boundary point that belongs to the domain.
    pub fn edge_needs_margin(&self, axis: usize, upper: bool) -> bool {
        match self.kind {
            DomainKind::HalfLine => upper,
            DomainKind::Line | DomainKind::OpenBox => {
                let _ = axis;
                true
            }
        }
    }
}
