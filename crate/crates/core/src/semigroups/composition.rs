use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;

use super::family::{Applied, OperatorFamily, TimeDomain};
use super::semiflow::Semiflow;
use crate::error::{LabError, Result};
use crate::spaces::{DomainKind, GridFunction, NormMode, StateSpace, Stencil, WeightedGridSpace};

const PAR_THRESHOLD: usize = 8192;

/// `(T_phi(t) f)(x) = f(phi(t, x))` on a grid space, with linear interpolation
/// for off-grid reads and zero for reads outside the window.
#[derive(Debug, Clone)]
pub struct CompositionFamily {
    space: Arc<WeightedGridSpace>,
    state: StateSpace,
    phi: Semiflow,
}

impl CompositionFamily {
    pub fn new(space: Arc<WeightedGridSpace>, phi: Semiflow) -> Result<Self> {
        if phi.dim() != space.dim() {
            return Err(LabError::DimensionMismatch { expected: space.dim(), got: phi.dim() });
        }
        Ok(Self { state: StateSpace::single(space.clone()), space, phi })
    }

    /// `(T(t) f)(x) = f(x + t)`.
    pub fn translation(space: Arc<WeightedGridSpace>) -> Result<Self> {
        let kind = space.domain().kind;
        if kind == DomainKind::OpenBox {
            return Err(LabError::InvalidParameter("translation needs a half-line or line domain".into()));
        }
        let phi = Semiflow::translation(space.dim(), kind);
        Self::new(space, phi)
    }

    pub fn semiflow(&self) -> &Semiflow {
        &self.phi
    }

    pub fn space(&self) -> &Arc<WeightedGridSpace> {
        &self.space
    }

    fn time_domain_of(phi: &Semiflow) -> TimeDomain {
        if phi.group_like() {
            TimeDomain::Group
        } else {
            TimeDomain::Forward
        }
    }

    /// Stencils for the reads `f(phi(t, x_i))`.
    pub fn read_stencils(&self, t: f64) -> Result<Vec<Option<Stencil>>> {
        let n = self.space.len();
        let one = |i: usize| -> Result<Option<Stencil>> {
            let x = self.space.point(i);
            let mut y = vec![0.0; x.len()];
            if !self.phi.map(t, &x, &mut y) {
                return Err(LabError::SemiflowDomain { label: self.phi.label(), t, point: x });
            }
            Ok(self.space.stencil(&y))
        };
        if n >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(one).collect()
        } else {
            (0..n).map(one).collect()
        }
    }

    /// Stencils for the pullback reads `f(phi(t, .)^{-1}(y_i))`, `None` off the image.
    fn pullback_stencils(&self, t: f64) -> Vec<Option<Stencil>> {
        let one = |i: usize| -> Option<Stencil> {
            let y = self.space.point(i);
            let mut x = vec![0.0; y.len()];
            if self.phi.inverse_on_image(t, &y, &mut x) {
                self.space.stencil(&x)
            } else {
                None
            }
        };
        let n = self.space.len();
        if n >= PAR_THRESHOLD {
            (0..n).into_par_iter().map(one).collect()
        } else {
            (0..n).map(one).collect()
        }
    }

    fn gather(stencils: &[Option<Stencil>], f: &[Complex64]) -> Vec<Complex64> {
        let zero = Complex64::new(0.0, 0.0);
        stencils.iter().map(|s| s.as_ref().map_or(zero, |s| s.read(f))).collect()
    }

    /// Whether some nonzero sample of `f` is the image of a domain point
    /// outside the window, i.e. `T(t) f` has mass the grid cannot hold.
    fn image_escapes(&self, t: f64, f: &[Complex64]) -> bool {
        let mut y = vec![0.0; self.space.dim()];
        let mut x = vec![0.0; self.space.dim()];
        f.iter().enumerate().any(|(j, v)| {
            if v.norm() == 0.0 {
                return false;
            }
            self.space.point_into(j, &mut x);
            self.phi.inverse_on_image(t, &x, &mut y) && self.phi.in_domain(&y) && !self.space.domain().in_window(&y)
        })
    }

    /// Whether the forward image of `supp f` leaves the window.
    fn support_escapes(&self, t: f64, f: &[Complex64]) -> bool {
        let mut y = vec![0.0; self.space.dim()];
        let mut x = vec![0.0; self.space.dim()];
        f.iter().enumerate().any(|(j, v)| {
            if v.norm() == 0.0 {
                return false;
            }
            self.space.point_into(j, &mut x);
            !self.phi.map(t, &x, &mut y) || !self.space.domain().in_window(&y)
        })
    }

    /// Log of an operator-norm bound of the interpolation matrix given its
    /// row stencils. Everything is accumulated in logs, since the bound on
    /// long shifts over decaying weights exceeds the float range.
    pub fn stencil_ln_norm_bound(space: &WeightedGridSpace, stencils: &[Option<Stencil>]) -> f64 {
        let ln_rho = space.ln_weight_samples();
        match space.mode() {
            NormMode::C0Sup => stencils
                .iter()
                .enumerate()
                .filter_map(|(i, s)| {
                    let s = s.as_ref()?;
                    Some(log_sum_exp(s.entries().iter().map(|&(j, w)| w.abs().ln() + ln_rho[i] - ln_rho[j])))
                })
                .fold(f64::NEG_INFINITY, f64::max),
            NormMode::Lp(p) => {
                // Column j of the L^1(mu) bound is sum_i |s_ij| mu_i / mu_j.
                let ln_mu = space.ln_measure();
                let mut col: Vec<Vec<f64>> = vec![Vec::new(); ln_mu.len()];
                let mut row_max: f64 = 0.0;
                for (i, s) in stencils.iter().enumerate() {
                    if let Some(s) = s {
                        let mut row = 0.0;
                        for &(j, w) in s.entries() {
                            col[j].push(w.abs().ln() + ln_mu[i] - ln_mu[j]);
                            row += w.abs();
                        }
                        row_max = row_max.max(row);
                    }
                }
                let ln_l1 = col.into_iter().map(|c| log_sum_exp(c.into_iter())).fold(f64::NEG_INFINITY, f64::max);
                if p == 1.0 {
                    ln_l1
                } else {
                    ln_l1 / p + (1.0 - 1.0 / p) * row_max.ln()
                }
            }
        }
    }
}

fn log_sum_exp(terms: impl Iterator<Item = f64>) -> f64 {
    let v: Vec<f64> = terms.collect();
    let m = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + v.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

impl OperatorFamily for CompositionFamily {
    fn state_space(&self) -> &StateSpace {
        &self.state
    }

    fn time_domain(&self) -> TimeDomain {
        Self::time_domain_of(&self.phi)
    }

    fn description(&self) -> String {
        format!("composition with {}", self.phi.label())
    }

    fn apply(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        self.time_domain().check(t)?;
        self.state.check(f)?;
        if t == 0.0 {
            return Ok(Applied { value: f.clone(), truncated: false });
        }
        let stencils = self.read_stencils(t)?;
        let values = Self::gather(&stencils, &f.values);
        let truncated = self.image_escapes(t, &f.values);
        Ok(Applied { value: GridFunction { values, space_id: f.space_id }, truncated })
    }

    fn exact_in_time(&self) -> bool {
        self.phi.closed_form()
    }

    fn norm_bound(&self, t: f64) -> Result<f64> {
        Ok(self.ln_norm_bound(t)?.exp())
    }

    fn ln_norm_bound(&self, t: f64) -> Result<f64> {
        self.time_domain().check(t)?;
        if t == 0.0 {
            return Ok(0.0);
        }
        Ok(Self::stencil_ln_norm_bound(&self.space, &self.read_stencils(t)?))
    }

    fn pullback(&self, t: f64, f: &GridFunction) -> Result<Applied> {
        self.time_domain().check(t)?;
        self.state.check(f)?;
        if !self.phi.has_inverse() {
            return Err(LabError::OracleUnavailable(format!("{} has no inverse on its image", self.phi.label())));
        }
        if t == 0.0 {
            return Ok(Applied { value: f.clone(), truncated: false });
        }
        let values = Self::gather(&self.pullback_stencils(t), &f.values);
        let truncated = self.support_escapes(t, &f.values);
        Ok(Applied { value: GridFunction { values, space_id: f.space_id }, truncated })
    }

    fn has_pullback(&self) -> bool {
        self.phi.has_inverse()
    }
}

/// `(T(t) f)(x) = f(x + t)` on `space`.
pub fn translate_apply(space: &Arc<WeightedGridSpace>, f: &GridFunction, t: f64) -> Result<Applied> {
    CompositionFamily::translation(space.clone())?.apply(t, f)
}

/// `(T_phi(t) f)(x) = f(phi(t, x))` on `space`.
pub fn compose_apply(space: &Arc<WeightedGridSpace>, f: &GridFunction, t: f64, phi: &Semiflow) -> Result<Applied> {
    CompositionFamily::new(space.clone(), phi.clone())?.apply(t, f)
}
