//! Distance-generating functions and Bregman proximal steps.

use crate::error::{Error, Result};
use crate::problems::Constraint;
use crate::vecops;

/// Distance-generating function `omega` and its Bregman divergence
/// `V(x, u) = omega(u) - omega(x) - <grad omega(x), u - x>`.
pub trait ProxFunction: Send + Sync {
    fn omega(&self, x: &[f64]) -> f64;

    fn grad_omega(&self, x: &[f64], out: &mut [f64]);

    /// Quadratic growth constant `C` with `V(x, u) <= (C/2)|x - u|^2`.
    fn growth_constant(&self) -> f64;

    fn divergence(&self, x: &[f64], u: &[f64]) -> f64 {
        let mut g = vec![0.0; x.len()];
        self.grad_omega(x, &mut g);
        let diff: Vec<f64> = u.iter().zip(x).map(|(a, b)| a - b).collect();
        self.omega(u) - self.omega(x) - vecops::dot(&g, &diff)
    }

    /// `argmin_{u in X} <g, u> + sum_j a_j V(anchor_j, u)`, written into `out`.
    fn minimize_into(
        &self,
        g: &[f64],
        anchors: &[(&[f64], f64)],
        constraint: Constraint,
        out: &mut [f64],
    ) -> Result<()>;

    fn minimize_linear_plus_divergences(
        &self,
        g: &[f64],
        anchors: &[(&[f64], f64)],
        constraint: Constraint,
    ) -> Result<Vec<f64>> {
        let mut out = vec![0.0; g.len()];
        self.minimize_into(g, anchors, constraint, &mut out)?;
        Ok(out)
    }
}

/// `omega(x) = |x|^2 / 2`, so `V(x, u) = |x - u|^2 / 2` and `C = 1`.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Euclidean;

impl ProxFunction for Euclidean {
    fn omega(&self, x: &[f64]) -> f64 {
        0.5 * vecops::norm_sq(x)
    }

    fn grad_omega(&self, x: &[f64], out: &mut [f64]) {
        out.copy_from_slice(x);
    }

    fn growth_constant(&self) -> f64 {
        1.0
    }

    fn divergence(&self, x: &[f64], u: &[f64]) -> f64 {
        0.5 * vecops::dist_sq(x, u)
    }

    fn minimize_into(
        &self,
        g: &[f64],
        anchors: &[(&[f64], f64)],
        constraint: Constraint,
        out: &mut [f64],
    ) -> Result<()> {
        let total: f64 = anchors.iter().map(|(_, a)| a).sum();
        if anchors.iter().any(|&(_, a)| a < 0.0) || !(total > 0.0) {
            return Err(Error::invalid(format!(
                "prox anchor weights must be nonnegative with a positive sum, got total {total}"
            )));
        }
        Error::check_dim(g.len(), out.len())?;
        for (o, gi) in out.iter_mut().zip(g) {
            *o = -gi;
        }
        for &(anchor, a) in anchors {
            Error::check_dim(g.len(), anchor.len())?;
            vecops::axpy(a, anchor, out);
        }
        vecops::scale(1.0 / total, out);
        constraint.project(out);
        Ok(())
    }
}

/// `argmin_{u in X} a_lin <g, u> + a_anchor V(anchor, u)`.
pub fn bregman_prox_step(
    prox: &dyn ProxFunction,
    g: &[f64],
    anchor: &[f64],
    (a_lin, a_anchor): (f64, f64),
    constraint: Constraint,
) -> Result<Vec<f64>> {
    if !(a_anchor > 0.0) {
        return Err(Error::invalid(format!("anchor weight must be positive, got {a_anchor}")));
    }
    Error::check_dim(g.len(), anchor.len())?;
    let scaled: Vec<f64> = g.iter().map(|gi| a_lin * gi).collect();
    prox.minimize_linear_plus_divergences(&scaled, &[(anchor, a_anchor)], constraint)
}
