use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Closed-form weight shapes. Multi-dimensional points are handled
/// separably: the log-weight is summed over coordinates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum WeightShape {
    /// `c`
    Constant { value: f64 },
    /// `e^{rate x}`
    Exponential { rate: f64 },
    /// `e^{-rate |x|}`
    SymmetricExponential { rate: f64 },
    /// `e^{-rate max(x, 0)}`: flat on the left, decaying on the right.
    OneSidedExponential { rate: f64 },
    /// `e^{-a x^2}`
    Gaussian { a: f64 },
    /// `(1 + x)^{-power}` on `x > -1`.
    PowerDecay { power: f64 },
    /// `x / (1 + x^2)` on `x > 0`.
    RationalBump,
    /// `(2 + sin x) e^{-x}`
    ModulatedExponential,
}

impl WeightShape {
    fn ln_coordinate(&self, x: f64) -> f64 {
        match *self {
            WeightShape::Constant { value } => value.ln(),
            WeightShape::Exponential { rate } => rate * x,
            WeightShape::SymmetricExponential { rate } => -rate * x.abs(),
            WeightShape::OneSidedExponential { rate } => -rate * x.max(0.0),
            WeightShape::Gaussian { a } => -a * x * x,
            WeightShape::PowerDecay { power } => {
                if x > -1.0 {
                    -power * (1.0 + x).ln()
                } else {
                    f64::NAN
                }
            }
            WeightShape::RationalBump => {
                if x > 0.0 {
                    x.ln() - (1.0 + x * x).ln()
                } else {
                    f64::NAN
                }
            }
            WeightShape::ModulatedExponential => (2.0 + x.sin()).ln() - x,
        }
    }

    fn describe(&self) -> String {
        match self {
            WeightShape::Constant { value } => format!("{value}"),
            WeightShape::Exponential { rate } => format!("exp({rate} x)"),
            WeightShape::SymmetricExponential { rate } => format!("exp(-{rate} |x|)"),
            WeightShape::OneSidedExponential { rate } => format!("exp(-{rate} max(x,0))"),
            WeightShape::Gaussian { a } => format!("exp(-{a} x^2)"),
            WeightShape::PowerDecay { power } => format!("(1+x)^-{power}"),
            WeightShape::RationalBump => "x/(1+x^2)".into(),
            WeightShape::ModulatedExponential => "(2+sin x) exp(-x)".into(),
        }
    }
}

type LnFn = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
enum Evaluator {
    Shape(WeightShape),
    /// Log-weight supplied by the caller.
    Custom(LnFn),
    /// `factor * rho`
    Scaled(Box<WeightFunction>, f64),
    /// `rho * sigma`
    Product(Box<WeightFunction>, Box<WeightFunction>),
}

/// A positive weight `rho` together with the admissibility constants `(M, omega)`
/// it claims. The claim is certified by the admissibility checkers, never assumed.
///
/// Weights are evaluated in log form so that decaying weights far out on a
/// truncated half-line stay representable.
#[derive(Clone)]
pub struct WeightFunction {
    evaluator: Evaluator,
    pub m: f64,
    pub omega: f64,
    pub label: String,
}

impl fmt::Debug for WeightFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("WeightFunction").field("label", &self.label).field("m", &self.m).field("omega", &self.omega).finish()
    }
}

impl WeightFunction {
    pub fn from_shape(shape: WeightShape, m: f64, omega: f64) -> Self {
        let label = shape.describe();
        Self { evaluator: Evaluator::Shape(shape), m, omega, label }
    }

    /// Weight from a log-density closure.
    pub fn from_ln_fn(label: impl Into<String>, m: f64, omega: f64, ln: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self { evaluator: Evaluator::Custom(Arc::new(ln)), m, omega, label: label.into() }
    }

    pub fn from_fn(label: impl Into<String>, m: f64, omega: f64, rho: impl Fn(&[f64]) -> f64 + Send + Sync + 'static) -> Self {
        Self::from_ln_fn(label, m, omega, move |x| rho(x).ln())
    }

    pub fn constant(value: f64) -> Self {
        Self::from_shape(WeightShape::Constant { value }, 1.0, 0.0)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            evaluator: Evaluator::Scaled(Box::new(self.clone()), factor),
            m: self.m,
            omega: self.omega,
            label: format!("{factor}*({})", self.label),
        }
    }

    pub fn product(&self, other: &WeightFunction) -> Self {
        Self {
            evaluator: Evaluator::Product(Box::new(self.clone()), Box::new(other.clone())),
            m: self.m * other.m,
            omega: self.omega + other.omega,
            label: format!("({})*({})", self.label, other.label),
        }
    }

    pub fn with_claim(mut self, m: f64, omega: f64) -> Self {
        self.m = m;
        self.omega = omega;
        self
    }

    pub fn shape(&self) -> Option<&WeightShape> {
        match &self.evaluator {
            Evaluator::Shape(s) => Some(s),
            _ => None,
        }
    }

    /// `ln rho(x)`; NaN outside the weight's natural domain.
    pub fn ln_eval(&self, x: &[f64]) -> f64 {
        match &self.evaluator {
            Evaluator::Shape(s) => x.iter().map(|&v| s.ln_coordinate(v)).sum(),
            Evaluator::Custom(f) => f(x),
            Evaluator::Scaled(w, c) => w.ln_eval(x) + c.ln(),
            Evaluator::Product(a, b) => a.ln_eval(x) + b.ln_eval(x),
        }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.ln_eval(x).exp()
    }

    /// Evaluates and checks positivity, as required of every sampled point.
    pub fn eval_checked(&self, x: &[f64]) -> Result<f64> {
        let ln = self.ln_eval(x);
        let v = ln.exp();
        if ln.is_nan() || !(v > 0.0) || !v.is_finite() {
            return Err(LabError::InvalidWeight { label: self.label.clone(), point: x.to_vec(), value: v });
        }
        Ok(v)
    }

    pub fn ln_eval_checked(&self, x: &[f64]) -> Result<f64> {
        let ln = self.ln_eval(x);
        if !ln.is_finite() {
            return Err(LabError::InvalidWeight { label: self.label.clone(), point: x.to_vec(), value: ln.exp() });
        }
        Ok(ln)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn log_form_survives_far_tails() {
        let w = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        assert_relative_eq!(w.ln_eval(&[1000.0]), -1000.0);
        assert_eq!(w.eval(&[1000.0]), 0.0);
        assert!(w.eval_checked(&[1000.0]).is_err());
        assert!(w.ln_eval_checked(&[1000.0]).is_ok());
    }

    #[test]
    fn shapes_match_closed_forms() {
        let x: f64 = 0.7;
        let cases = [
            (WeightShape::SymmetricExponential { rate: 1.0 }, (-x).exp()),
            (WeightShape::PowerDecay { power: 3.0 }, (1.0 + x).powi(-3)),
            (WeightShape::RationalBump, x / (1.0 + x * x)),
            (WeightShape::ModulatedExponential, (2.0 + x.sin()) * (-x).exp()),
            (WeightShape::OneSidedExponential { rate: 2.0 }, (-2.0 * x).exp()),
        ];
        for (shape, expect) in cases {
            let w = WeightFunction::from_shape(shape, 1.0, 0.0);
            assert_relative_eq!(w.eval(&[x]), expect, max_relative = 1e-14);
        }
        let flat = WeightFunction::from_shape(WeightShape::OneSidedExponential { rate: 2.0 }, 1.0, 0.0);
        assert_eq!(flat.eval(&[-5.0]), 1.0);
    }

    #[test]
    fn rational_bump_rejects_nonpositive_points() {
        let w = WeightFunction::from_shape(WeightShape::RationalBump, 1.0, 1.0);
        assert!(w.eval_checked(&[0.0]).is_err());
        assert!(w.eval_checked(&[-1.0]).is_err());
    }

    #[test]
    fn scaled_and_product_compose() {
        let w = WeightFunction::from_shape(WeightShape::Exponential { rate: -1.0 }, 1.0, 1.0);
        assert_relative_eq!(w.scaled(0.5).eval(&[2.0]), 0.5 * (-2.0f64).exp(), max_relative = 1e-14);
        assert_relative_eq!(w.product(&w).eval(&[2.0]), (-4.0f64).exp(), max_relative = 1e-14);
    }
}
