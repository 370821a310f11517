use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::discretized::{iterate_index, DiscreteOperator, Iterate};
use super::family::{Applied, OperatorFamily, SharedFamily, TimeDomain};
use crate::error::{LabError, Result};
use crate::spaces::{GridFunction, StateSpace};

/// Allowed deviation of `|lambda|` from 1.
pub const UNIMODULAR_TOL: f64 = 1e-12;

/// `lambda = e^{2 pi i p / q}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RationalRotation {
    pub p: i64,
    pub q: u64,
}

impl RationalRotation {
    pub fn new(p: i64, q: u64) -> Result<Self> {
        if q == 0 {
            return Err(LabError::InvalidParameter("rotation denominator must be positive".into()));
        }
        Ok(Self { p, q })
    }

    pub fn lambda(&self) -> Complex64 {
        self.power(1)
    }

    /// `lambda^n`, exactly 1 whenever `q` divides `p n`.
    pub fn power(&self, n: u64) -> Complex64 {
        let r = (self.p as i128 * n as i128).rem_euclid(self.q as i128);
        if r == 0 {
            Complex64::new(1.0, 0.0)
        } else {
            Complex64::from_polar(1.0, std::f64::consts::TAU * r as f64 / self.q as f64)
        }
    }
}

fn scale(f: &GridFunction, c: Complex64) -> GridFunction {
    if c == Complex64::new(1.0, 0.0) {
        f.clone()
    } else {
        f.scaled(c)
    }
}

/// `t -> lambda T(t)`. Not a semigroup unless `lambda = 1`, so `apply(0, .)`
/// is `lambda` times the identity.
#[derive(Clone)]
pub struct RotatedFamily {
    inner: SharedFamily,
    lambda: Complex64,
}

/// Rotates every operator of `family` by the unimodular scalar `lambda`.
pub fn rotate_family(family: SharedFamily, lambda: Complex64) -> Result<RotatedFamily> {
    if (lambda.norm() - 1.0).abs() > UNIMODULAR_TOL || !lambda.norm().is_finite() {
        return Err(LabError::InvalidRotation(lambda.norm()));
    }
    Ok(RotatedFamily { inner: family, lambda })
}

impl RotatedFamily {
    pub fn lambda(&self) -> Complex64 {
        self.lambda
    }
}

impl OperatorFamily for RotatedFamily {
    fn state_space(&self) -> &StateSpace {
        self.inner.state_space()
    }

    fn time_domain(&self) -> TimeDomain {
        self.inner.time_domain()
    }

    fn description(&self) -> String {
        format!("{} times {}", self.lambda, self.inner.description())
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let a = self.inner.apply(t, f)?;
        Ok(Applied { value: scale(&a.value, self.lambda), truncated: a.truncated })
    }

    fn exact_in_time(&self) -> bool {
        false
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.lambda.norm() * self.inner.norm_bound(t)?)
    }

    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.lambda.norm().ln() + self.inner.ln_norm_bound(t)?)
    }

    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let a = self.inner.pullback(t, f)?;
        Ok(Applied { value: scale(&a.value, self.lambda.inv()), truncated: a.truncated })
    }

    fn has_pullback(&self) -> bool {
        self.inner.has_pullback()
    }
}

/// `lambda T(t0)` with `lambda` a rational rotation; its powers are
/// `lambda^n T(t0)^n` with `lambda^n` computed exactly.
#[derive(Clone, Debug)]
pub struct RotatedOperator {
    op: DiscreteOperator,
    rotation: RationalRotation,
}

pub fn rotate_operator(op: DiscreteOperator, rotation: RationalRotation) -> RotatedOperator {
    RotatedOperator { op, rotation }
}

impl RotatedOperator {
    pub fn rotation(&self) -> RationalRotation {
        self.rotation
    }

    pub fn operator(&self) -> &DiscreteOperator {
        &self.op
    }

    pub fn iterate(&self, n: u64, f: &GridFunction) -> Result<Iterate> {
        let it = self.op.iterate(n, f)?;
        Ok(Iterate { value: scale(&it.value, self.rotation.power(n)), ..it })
    }
}

impl OperatorFamily for RotatedOperator {
    fn state_space(&self) -> &StateSpace {
        self.op.state_space()
    }

    fn time_domain(&self) -> TimeDomain {
        TimeDomain::Forward
    }

    fn description(&self) -> String {
        format!("exp(2 pi i {}/{}) {}", self.rotation.p, self.rotation.q, self.op.description())
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let it = self.iterate(iterate_index(t)?, f)?;
        Ok(Applied { value: it.value, truncated: it.truncated })
    }

    fn exact_in_time(&self) -> bool {
        true
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        self.op.norm_bound(t)
    }

    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        self.op.ln_norm_bound(t)
    }

    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let n = iterate_index(t)?;
        let a = self.op.pullback(t, f)?;
        Ok(Applied { value: scale(&a.value, self.rotation.power(n).inv()), truncated: a.truncated })
    }

    fn has_pullback(&self) -> bool {
        self.op.has_pullback()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroups::{time_discretize, CompositionFamily};
    use crate::spaces::{DomainSpec, NormMode, WeightFunction, WeightedGridSpace};
    use std::sync::Arc;

    fn translation() -> (Arc<WeightedGridSpace>, SharedFamily) {
        let s = Arc::new(
            WeightedGridSpace::new(
                DomainSpec::half_line(10.0).unwrap(),
                &[1000],
                NormMode::Lp(1.0),
                WeightFunction::constant(1.0),
            )
            .unwrap(),
        );
        let fam: SharedFamily = Arc::new(CompositionFamily::translation(s.clone()).unwrap());
        (s, fam)
    }

    #[test]
    fn non_unimodular_lambda_is_rejected() {
        let (_, fam) = translation();
        assert!(matches!(rotate_family(fam.clone(), Complex64::new(1.1, 0.0)), Err(LabError::InvalidRotation(_))));
        assert!(rotate_family(fam, Complex64::from_polar(1.0, 0.3)).is_ok());
    }

    #[test]
    fn unit_and_negative_rotations() {
        let (s, fam) = translation();
        let f = s.from_real_fn(|x| x[0].sin());
        let same = rotate_family(fam.clone(), Complex64::new(1.0, 0.0)).unwrap();
        assert_eq!(same.apply(0.5, &f).unwrap().value, fam.apply(0.5, &f).unwrap().value);
        let neg = rotate_family(fam.clone(), Complex64::new(-1.0, 0.0)).unwrap();
        let expect = fam.apply(0.5, &f).unwrap().value.scaled(Complex64::new(-1.0, 0.0));
        assert_eq!(neg.apply(0.5, &f).unwrap().value, expect);
    }

    #[test]
    fn cube_root_of_unity_cubes_away() {
        let (s, fam) = translation();
        let f = s.from_real_fn(|x| (-(x[0] - 4.0).powi(2)).exp());
        let rot = RationalRotation::new(1, 3).unwrap();
        let fam_rot = rotate_family(fam.clone(), rot.lambda()).unwrap();
        let mut cur = f.clone();
        for _ in 0..3 {
            cur = fam_rot.apply(0.5, &cur).unwrap().value;
        }
        let mut plain = f.clone();
        for _ in 0..3 {
            plain = fam.apply(0.5, &plain).unwrap().value;
        }
        assert!(s.distance(&cur, &plain).unwrap() < 1e-14);
        assert_eq!(rot.power(3), Complex64::new(1.0, 0.0));
        assert_eq!(rot.power(300), Complex64::new(1.0, 0.0));

        let op = rotate_operator(time_discretize(fam.clone(), 1.0).unwrap(), rot);
        assert_eq!(op.iterate(6, &f).unwrap().value, fam.apply(6.0, &f).unwrap().value);
    }
}
