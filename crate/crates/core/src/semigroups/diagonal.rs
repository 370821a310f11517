use std::sync::Arc;

use num_complex::Complex64;

use super::family::{Applied, OperatorFamily, TimeDomain};
use crate::error::{LabError, Result};
use crate::spaces::{GridFunction, NormMode, StateSpace, WeightedGridSpace};

/// `T(t) e_j = e^{i theta_j t} e_j` on `C^n` with the plain `l^p` norm.
#[derive(Debug, Clone)]
pub struct DiagonalSemigroup {
    frequencies: Vec<f64>,
    /// `theta_j / 2 pi`, so integer periods stay exact.
    cycles: Vec<f64>,
    state: StateSpace,
}

impl DiagonalSemigroup {
    pub fn new(frequencies: Vec<f64>, mode: NormMode) -> Result<Self> {
        if frequencies.is_empty() {
            return Err(LabError::InvalidParameter("diagonal semigroup needs at least one frequency".into()));
        }
        if let Some(bad) = frequencies.iter().find(|v| !v.is_finite()) {
            return Err(LabError::InvalidParameter(format!("frequency {bad} is not finite")));
        }
        let space = WeightedGridSpace::sequence(frequencies.len(), mode)?;
        let cycles = frequencies.iter().map(|v| v / std::f64::consts::TAU).collect();
        Ok(Self { frequencies, cycles, state: StateSpace::single(Arc::new(space)) })
    }

    /// Frequencies given in turns: `theta_j = 2 pi c_j`.
    pub fn from_cycles(cycles: Vec<f64>, mode: NormMode) -> Result<Self> {
        let mut d = Self::new(cycles.iter().map(|c| c * std::f64::consts::TAU).collect(), mode)?;
        d.cycles = cycles;
        Ok(d)
    }

    pub fn frequencies(&self) -> &[f64] {
        &self.frequencies
    }

    pub fn dimension(&self) -> usize {
        self.frequencies.len()
    }

    pub fn space(&self) -> &Arc<WeightedGridSpace> {
        self.state.grid().expect("diagonal state space is a single grid")
    }

    /// `e^{i theta_j t}`, with the phase reduced in turns.
    pub fn eigenvalue(&self, j: usize, t: f64) -> Complex64 {
        let turns = (self.cycles[j] * t).rem_euclid(1.0);
        if turns == 0.0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, std::f64::consts::TAU * turns)
        }
    }
}

impl OperatorFamily for DiagonalSemigroup {
    fn state_space(&self) -> &StateSpace {
        &self.state
    }

    fn time_domain(&self) -> TimeDomain {
        TimeDomain::Group
    }

    fn description(&self) -> String {
        format!("diagonal semigroup theta = {:?}", self.frequencies)
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        TimeDomain::Group.check(t)?;
        self.state.check(f)?;
        if t == 0.0 {
            return Ok(Applied { value: f.clone(), truncated: false });
        }
        let values = f.values.iter().enumerate().map(|(j, v)| v * self.eigenvalue(j, t)).collect();
        Ok(Applied { value: GridFunction { values, space_id: f.space_id }, truncated: false })
    }

    fn exact_in_time(&self) -> bool {
        true
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        TimeDomain::Group.check(t)?;
        Ok(1.0)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn basis_vectors_are_eigenvectors() {
        let d = DiagonalSemigroup::new(vec![1.0, 2.5], NormMode::Lp(2.0)).unwrap();
        let s = d.state_space();
        for j in 0..2 {
            let out = d.apply(0.8, &s.basis(j)).unwrap().value;
            let expect = Complex64::from_polar(1.0, d.frequencies()[j] * 0.8);
            assert!((out.values[j] - expect).norm() < 1e-15);
            assert_eq!(out.values[1 - j], Complex64::new(0.0, 0.0));
        }
    }

    #[test]
    fn integer_periods_return_exactly() {
        let d = DiagonalSemigroup::new(vec![TAU, 2.0 * TAU], NormMode::Lp(2.0)).unwrap();
        let f = d.state_space().function(vec![Complex64::new(1.0, 2.0), Complex64::new(-3.0, 0.5)]).unwrap();
        for n in 1..50 {
            assert_eq!(d.apply(n as f64, &f).unwrap().value, f);
        }
    }
}
