use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::spaces::{GridFunction, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeDomain {
    /// `t >= 0`
    Forward,
    /// all real `t`
    Group,
}

impl TimeDomain {
    pub fn check(self, t: f64) -> Result<()> {
        if !t.is_finite() {
            return Err(LabError::InvalidTime { t, domain: self.name() });
        }
        if self == TimeDomain::Forward && t < 0.0 {
            return Err(LabError::InvalidTime { t, domain: self.name() });
        }
        Ok(())
    }

    pub fn name(self) -> &'static str {
        match self {
            TimeDomain::Forward => "t >= 0",
            TimeDomain::Group => "t real",
        }
    }

    pub fn meet(self, other: TimeDomain) -> TimeDomain {
        if self == TimeDomain::Group && other == TimeDomain::Group {
            TimeDomain::Group
        } else {
            TimeDomain::Forward
        }
    }
}

/// The result of applying a family at some time. `truncated` is set when
/// part of the true image lies beyond the truncated window and was dropped.
#[derive(Debug, Clone)]
pub struct Applied {
    pub value: GridFunction,
    pub truncated: bool,
}

/// A family `(W(t))_t` of bounded linear operators on a discretized space.
pub trait OperatorFamily: Send + Sync {
    fn state_space(&self) -> &StateSpace;

    fn time_domain(&self) -> TimeDomain;

    fn description(&self) -> String;

    /// `W(t) f`; `W(0)` is the exact identity for semigroups.
    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied>;

    /// Whether `W(n t)` is available in closed form, so iterates need not compound.
    fn exact_in_time(&self) -> bool;

    /// A rigorous upper bound on the norm of the discrete operator at `t`.
    fn norm_bound(&self, t: f64) -> Result<f64>;

    /// `ln norm_bound(t)`, for bounds beyond the float range.
    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.norm_bound(t)?.ln())
    }

    /// The pullback tooth `P_t f`, a right inverse of `W(t)` on `f`.
    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let _ = (t, f);
        Err(LabError::OracleUnavailable(format!("{} has no pullback", self.description())))
    }

    /// Whether `pullback` is implemented.
    fn has_pullback(&self) -> bool {
        false
    }
}

pub type SharedFamily = Arc<dyn OperatorFamily>;

/// `distance(W(t) f, f)`.
pub fn residual(family: &dyn OperatorFamily, f: &GridFunction, t: f64) -> Result<f64> {
    let applied = family.apply(t, f)?;
    family.state_space().distance(&applied.value, f)
}

/// `residual` together with the truncation flag of the underlying apply.
pub fn residual_flagged(family: &dyn OperatorFamily, f: &GridFunction, t: f64) -> Result<(f64, bool)> {
    let applied = family.apply(t, f)?;
    Ok((family.state_space().distance(&applied.value, f)?, applied.truncated))
}
