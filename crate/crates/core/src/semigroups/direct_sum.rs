use super::family::{Applied, OperatorFamily, SharedFamily, TimeDomain};
use crate::error::Result;
use crate::spaces::{GridFunction, StateSpace};

/// `T_a(t) (+) T_b(t)` on the product space with the max norm.
#[derive(Clone)]
pub struct DirectSum {
    a: SharedFamily,
    b: SharedFamily,
    state: StateSpace,
}

pub fn direct_sum(a: SharedFamily, b: SharedFamily) -> DirectSum {
    let state = StateSpace::product(a.state_space(), b.state_space());
    DirectSum { a, b, state }
}

impl DirectSum {
    pub fn first(&self) -> &SharedFamily {
        &self.a
    }

    pub fn second(&self) -> &SharedFamily {
        &self.b
    }

    /// Splits `f` into its two components.
    pub fn split(&self, f: &GridFunction) -> Result<(GridFunction, GridFunction)> {
        self.state.check(f)?;
        let n = self.a.state_space().len();
        let fa = self.a.state_space().function(f.values[..n].to_vec())?;
        let fb = self.b.state_space().function(f.values[n..].to_vec())?;
        Ok((fa, fb))
    }

    pub fn pair(&self, fa: &GridFunction, fb: &GridFunction) -> Result<GridFunction> {
        self.a.state_space().check(fa)?;
        self.b.state_space().check(fb)?;
        let mut values = fa.values.clone();
        values.extend_from_slice(&fb.values);
        self.state.function(values)
    }

    fn both(&self, f: &GridFunction, op: impl Fn(&SharedFamily, &GridFunction) -> Result<Applied>) -> Result<Applied> {
        let (fa, fb) = self.split(f)?;
        let ra = op(&self.a, &fa)?;
        let rb = op(&self.b, &fb)?;
        Ok(Applied { value: self.pair(&ra.value, &rb.value)?, truncated: ra.truncated || rb.truncated })
    }
}

impl OperatorFamily for DirectSum {
    fn state_space(&self) -> &StateSpace {
        &self.state
    }

    fn time_domain(&self) -> TimeDomain {
        self.a.time_domain().meet(self.b.time_domain())
    }

    fn description(&self) -> String {
        format!("({}) (+) ({})", self.a.description(), self.b.description())
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        self.time_domain().check(t)?;
        self.both(f, |fam, g| fam.apply(t, g))
    }

    fn exact_in_time(&self) -> bool {
        self.a.exact_in_time() && self.b.exact_in_time()
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.a.norm_bound(t)?.max(self.b.norm_bound(t)?))
    }

    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.a.ln_norm_bound(t)?.max(self.b.ln_norm_bound(t)?))
    }

    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        self.both(f, |fam, g| fam.pullback(t, g))
    }

    fn has_pullback(&self) -> bool {
        self.a.has_pullback() && self.b.has_pullback()
    }
}
