use std::collections::hash_map::DefaultHasher;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use num_complex::Complex64;

use super::grid::{GridFunction, SpaceId, WeightedGridSpace};
use crate::error::{LabError, Result};

/// The space an operator family acts on: a single grid space or a finite
/// product of grid spaces carrying the max of component norms.
#[derive(Debug, Clone)]
pub struct StateSpace {
    parts: Vec<Arc<WeightedGridSpace>>,
    offsets: Vec<usize>,
    id: SpaceId,
}

impl StateSpace {
    pub fn single(space: Arc<WeightedGridSpace>) -> Self {
        let id = space.id();
        Self { offsets: vec![0, space.len()], parts: vec![space], id }
    }

    /// Product of two state spaces; nested products are flattened.
    pub fn product(a: &StateSpace, b: &StateSpace) -> Self {
        let parts: Vec<_> = a.parts.iter().chain(&b.parts).cloned().collect();
        let mut offsets = vec![0];
        for p in &parts {
            offsets.push(offsets.last().unwrap() + p.len());
        }
        let mut h = DefaultHasher::new();
        "product".hash(&mut h);
        for p in &parts {
            p.id().hash(&mut h);
        }
        Self { parts, offsets, id: SpaceId(h.finish()) }
    }

    pub fn id(&self) -> SpaceId {
        self.id
    }

    pub fn parts(&self) -> &[Arc<WeightedGridSpace>] {
        &self.parts
    }

    pub fn is_product(&self) -> bool {
        self.parts.len() > 1
    }

    /// The underlying grid space when this is not a product.
    pub fn grid(&self) -> Option<&Arc<WeightedGridSpace>> {
        (self.parts.len() == 1).then(|| &self.parts[0])
    }

    pub fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self, part: usize) -> std::ops::Range<usize> {
        self.offsets[part]..self.offsets[part + 1]
    }

    /// Smallest grid spacing over all parts.
    pub fn h(&self) -> f64 {
        self.parts.iter().map(|p| p.h()).fold(f64::INFINITY, f64::min)
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

    pub fn zeros(&self) -> GridFunction {
        GridFunction { values: vec![Complex64::new(0.0, 0.0); self.len()], space_id: self.id }
    }

    pub fn function(&self, values: Vec<Complex64>) -> Result<GridFunction> {
        GridFunction::new(self.id, self.len(), values)
    }

    pub fn basis(&self, j: usize) -> GridFunction {
        let mut f = self.zeros();
        f.values[j] = Complex64::new(1.0, 0.0);
        f
    }

    pub fn norm_values(&self, values: &[Complex64]) -> f64 {
        self.parts.iter().enumerate().map(|(k, p)| p.norm_values(&values[self.range(k)])).fold(0.0, f64::max)
    }

    pub fn distance_values(&self, f: &[Complex64], g: &[Complex64]) -> f64 {
        self.parts.iter().enumerate().map(|(k, p)| p.distance_values(&f[self.range(k)], &g[self.range(k)])).fold(0.0, f64::max)
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

    /// Component `part` of `f`, as a function on that part's grid space.
    pub fn component(&self, f: &GridFunction, part: usize) -> Result<GridFunction> {
        self.check(f)?;
        Ok(GridFunction { values: f.values[self.range(part)].to_vec(), space_id: self.parts[part].id() })
    }

    /// Concatenates component functions into a function on this space.
    pub fn join(&self, pieces: &[GridFunction]) -> Result<GridFunction> {
        if pieces.len() != self.parts.len() {
            return Err(LabError::DimensionMismatch { expected: self.parts.len(), got: pieces.len() });
        }
        let mut values = Vec::with_capacity(self.len());
        for (p, piece) in self.parts.iter().zip(pieces) {
            p.check(piece)?;
            values.extend_from_slice(&piece.values);
        }
        Ok(GridFunction { values, space_id: self.id })
    }

    /// Re-tags pieces of a state-space function coming from sub-state-spaces.
    pub fn join_values(&self, values: Vec<Complex64>) -> Result<GridFunction> {
        self.function(values)
    }
}

impl From<Arc<WeightedGridSpace>> for StateSpace {
    fn from(s: Arc<WeightedGridSpace>) -> Self {
        StateSpace::single(s)
    }
}

impl From<WeightedGridSpace> for StateSpace {
    fn from(s: WeightedGridSpace) -> Self {
        StateSpace::single(Arc::new(s))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::NormMode;

    #[test]
    fn product_norm_is_max_of_components() {
        let a = Arc::new(WeightedGridSpace::sequence(2, NormMode::Lp(1.0)).unwrap());
        let b = Arc::new(WeightedGridSpace::sequence(3, NormMode::C0Sup).unwrap());
        let p = StateSpace::product(&a.clone().into(), &b.clone().into());
        assert_eq!(p.len(), 5);
        let f = a.from_real_fn(|_| 1.0);
        let g = b.from_real_fn(|_| 3.0);
        let fg = p.join(&[f.clone(), g.clone()]).unwrap();
        assert_eq!(p.norm(&fg).unwrap(), 3.0);
        assert_eq!(p.component(&fg, 0).unwrap(), f);
        assert_eq!(p.component(&fg, 1).unwrap(), g);
        assert!(p.norm(&f).is_err());
    }
}
