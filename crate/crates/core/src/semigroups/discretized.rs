use serde::Serialize;

use super::family::{Applied, OperatorFamily, SharedFamily, TimeDomain};
use crate::error::{LabError, Result};
use crate::spaces::{GridFunction, StateSpace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum IteratePath {
    /// `T(n t0)` applied in one step.
    Exact,
    /// `T(t0)` applied `n` times.
    Composed,
}

#[derive(Debug, Clone)]
pub struct Iterate {
    pub value: GridFunction,
    pub truncated: bool,
    pub path: IteratePath,
}

/// The single operator `T(t0)` of a family, with access to its powers.
#[derive(Clone)]
pub struct DiscreteOperator {
    family: SharedFamily,
    t0: f64,
    horizon: Option<f64>,
}

impl std::fmt::Debug for DiscreteOperator {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "DiscreteOperator(t0 = {}, {})", self.t0, self.family.description())
    }
}

/// `T(t0)` taken from `family`.
pub fn time_discretize(family: SharedFamily, t0: f64) -> Result<DiscreteOperator> {
    if !(t0 > 0.0 && t0.is_finite()) {
        return Err(LabError::InvalidParameter(format!("t0 must be positive, got {t0}")));
    }
    Ok(DiscreteOperator { family, t0, horizon: None })
}

impl DiscreteOperator {
    /// Iterates with `n t0` beyond `horizon` are flagged as truncated.
    pub fn with_horizon(mut self, horizon: f64) -> Self {
        self.horizon = Some(horizon);
        self
    }

    pub fn t0(&self) -> f64 {
        self.t0
    }

    pub fn family(&self) -> &SharedFamily {
        &self.family
    }

    pub fn path(&self) -> IteratePath {
        if self.family.exact_in_time() {
            IteratePath::Exact
        } else {
            IteratePath::Composed
        }
    }

    /// `T(t0)^n f`.
    pub fn iterate(&self, n: u64, f: &GridFunction) -> Result<Iterate> {
        let path = self.path();
        if n == 0 {
            self.family.state_space().check(f)?;
            return Ok(Iterate { value: f.clone(), truncated: false, path });
        }
        let beyond = self.horizon.is_some_and(|h| n as f64 * self.t0 > h);
        match path {
            IteratePath::Exact => {
                let a = self.family.apply(n as f64 * self.t0, f)?;
                Ok(Iterate { value: a.value, truncated: a.truncated || beyond, path })
            }
            IteratePath::Composed => {
                let mut cur = f.clone();
                let mut truncated = beyond;
                for _ in 0..n {
                    let a = self.family.apply(self.t0, &cur)?;
                    truncated |= a.truncated;
                    cur = a.value;
                }
                Ok(Iterate { value: cur, truncated, path })
            }
        }
    }
}

/// Integer-valued time, as required by operators indexed by iterates.
pub(crate) fn iterate_index(t: f64) -> Result<u64> {
    if t >= 0.0 && t.fract() == 0.0 && t.is_finite() {
        Ok(t as u64)
    } else {
        Err(LabError::InvalidTime { t, domain: "nonnegative integers" })
    }
}

/// Powers `n -> T(t0)^n` viewed as a family indexed by integer times.
impl OperatorFamily for DiscreteOperator {
    fn state_space(&self) -> &StateSpace {
        self.family.state_space()
    }

    fn time_domain(&self) -> TimeDomain {
        TimeDomain::Forward
    }

    fn description(&self) -> String {
        format!("T({}) of {}", self.t0, self.family.description())
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let it = self.iterate(iterate_index(t)?, f)?;
        Ok(Applied { value: it.value, truncated: it.truncated })
    }

    fn exact_in_time(&self) -> bool {
        true
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        let n = iterate_index(t)?;
        if n == 0 {
            return Ok(1.0);
        }
        Ok(self.ln_norm_bound(t)?.exp())
    }

    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        let n = iterate_index(t)?;
        if n == 0 {
            return Ok(0.0);
        }
        match self.path() {
            IteratePath::Exact => self.family.ln_norm_bound(n as f64 * self.t0),
            IteratePath::Composed => Ok(self.family.ln_norm_bound(self.t0)? * n as f64),
        }
    }

    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        let n = iterate_index(t)?;
        if self.path() != IteratePath::Exact {
            return Err(LabError::OracleUnavailable("pullback of composed iterates".into()));
        }
        self.family.pullback(n as f64 * self.t0, f)
    }

    fn has_pullback(&self) -> bool {
        self.family.has_pullback() && self.path() == IteratePath::Exact
    }
}
