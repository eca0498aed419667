//! The compatible pair `(t_hat, s_hat)` for a constant `c`.

use crate::error::{Error, Result};
use crate::hamiltonian::HamiltonianModel;
use crate::pieces::Root;

pub const EPS_ROOT: f64 = 1e-12;

#[derive(Clone, Copy, Debug)]
pub struct CompatiblePair<'a> {
    model: &'a HamiltonianModel,
    c: f64,
    r0: f64,
}

impl<'a> CompatiblePair<'a> {
    pub fn new(model: &'a HamiltonianModel, c: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(Error::Precondition(format!("c must be positive, got {c}")));
        }
        if !model.is_definite() {
            return Err(Error::Indefinite {
                det: model.pieces().total().det(),
            });
        }
        let r0 = if model.is_limit_circle() {
            (c / model.pieces().total().det()).sqrt()
        } else {
            0.0
        };
        Ok(CompatiblePair { model, c, r0 })
    }

    pub fn model(&self) -> &'a HamiltonianModel {
        self.model
    }

    pub fn c(&self) -> f64 {
        self.c
    }

    /// `sqrt(c / det Omega(a, b))` in the limit circle case, 0 otherwise.
    pub fn r0(&self) -> f64 {
        self.r0
    }

    /// Level `c / r^2`.
    pub fn level(&self, r: f64) -> f64 {
        self.c / (r * r)
    }

    pub(crate) fn t_hat_root(&self, r: f64) -> Result<Root> {
        if !(r > self.r0) {
            return Err(Error::Threshold { r, r0: self.r0 });
        }
        let p = self.model.pieces();
        p.forward_root(p.a(), self.level(r), None)
            .ok_or(Error::Threshold {
                r,
                r0: (self.c / p.total().det()).sqrt(),
            })
    }

    /// The unique `t` with `det Omega(a, t) = c / r^2`.
    pub fn t_hat(&self, r: f64) -> Result<f64> {
        Ok(self.t_hat_root(r)?.at)
    }

    pub(crate) fn s_hat_root(&self, t: f64, r: f64, hint: Option<usize>) -> Result<Root> {
        if !(r > self.r0) {
            return Err(Error::Threshold { r, r0: self.r0 });
        }
        let p = self.model.pieces();
        if !(t >= p.a() && t <= p.b()) {
            return Err(Error::Domain {
                t,
                a: p.a(),
                b: p.b(),
            });
        }
        p.backward_root(t, self.level(r), hint)
            .ok_or_else(|| Error::Precondition(format!("t = {t} lies before t_hat({r})")))
    }

    /// The unique `s` in `[a, t)` with `det Omega(s, t) = c / r^2`.
    pub fn s_hat(&self, t: f64, r: f64) -> Result<f64> {
        let root = self.s_hat_root(t, r, None)?;
        Ok(root.at.max(self.model.pieces().a()))
    }
}
