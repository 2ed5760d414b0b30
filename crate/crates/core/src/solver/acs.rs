//! Accelerated communication-sliding inner loop: an accelerated stochastic
//! solver for the local subproblem
//! `min_u <w, u> + f(u) + eta V(anchor, u)` that reuses one dual message.

use crate::error::{Error, Result};
use crate::problems::{AgentObjective, ProxFunction};
use crate::rng::StreamRng;
use crate::schedules::InnerSchedule;

/// Scratch buffers for [`acs_procedure`]; reusing one across calls keeps the
/// inner loop allocation-free.
#[derive(Clone, Debug, Default)]
pub struct AcsWorkspace {
    /// `u^t`
    pub u: Vec<f64>,
    /// `u_under^t`
    pub u_under: Vec<f64>,
    u_hat: Vec<f64>,
    grad: Vec<f64>,
    lin: Vec<f64>,
    omega_hat: Vec<f64>,
    omega_anchor: Vec<f64>,
    u_prev: Vec<f64>,
}

impl AcsWorkspace {
    pub fn new(d: usize) -> Self {
        let z = vec![0.0; d];
        AcsWorkspace {
            u: z.clone(),
            u_under: z.clone(),
            u_hat: z.clone(),
            grad: z.clone(),
            lin: z.clone(),
            omega_hat: z.clone(),
            omega_anchor: z.clone(),
            u_prev: z,
        }
    }

    fn resize(&mut self, d: usize) {
        if self.u.len() != d {
            *self = AcsWorkspace::new(d);
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct AcsOutput {
    /// `u^T`
    pub x: Vec<f64>,
    /// `u_under^T`
    pub x_under: Vec<f64>,
}

/// Runs `inner.steps` accelerated steps from `u^0 = u_under^0 = anchor`.
///
/// Each step takes one oracle sample `G^t` at the extrapolated point
/// `u_hat^t`, then a prox step on
/// `lambda_t [<w + G^t + eta(grad omega(u_hat) - grad omega(anchor)), u> + (mu+eta) V(u_hat, u)]
///  + [(1 - lambda_t)(mu+eta) + beta_t] V(u^{t-1}, u)`.
/// Results are left in `ws.u` and `ws.u_under`.
pub fn acs_procedure(
    objective: &dyn AgentObjective,
    prox: &dyn ProxFunction,
    inner: &InnerSchedule,
    w: &[f64],
    anchor: &[f64],
    rng: &mut StreamRng,
    ws: &mut AcsWorkspace,
) -> Result<()> {
    let d = objective.dim();
    Error::check_dim(d, w.len())?;
    Error::check_dim(d, anchor.len())?;
    if inner.steps == 0 {
        return Err(Error::invalid("inner budget T must be >= 1"));
    }
    ws.resize(d);
    let constraint = objective.constraint();
    let a = inner.mu + inner.eta;
    ws.u.copy_from_slice(anchor);
    ws.u_under.copy_from_slice(anchor);
    prox.grad_omega(anchor, &mut ws.omega_anchor);

    for t in 1..=inner.steps {
        let lambda = InnerSchedule::lambda(t);
        let beta = inner.beta(t);
        let den = beta + (1.0 - lambda * lambda) * a;
        let c_under = (1.0 - lambda) * (a + beta) / den;
        let c_u = lambda * ((1.0 - lambda) * a + beta) / den;
        debug_assert!((c_under + c_u - 1.0).abs() <= 1e-12, "extrapolation weights sum to {}", c_under + c_u);
        for ((h, ul), u) in ws.u_hat.iter_mut().zip(&ws.u_under).zip(&ws.u) {
            *h = c_under * ul + c_u * u;
        }

        objective.sample_gradient(&ws.u_hat, rng, &mut ws.grad);
        prox.grad_omega(&ws.u_hat, &mut ws.omega_hat);
        for i in 0..d {
            ws.lin[i] = lambda * (w[i] + ws.grad[i] + inner.eta * (ws.omega_hat[i] - ws.omega_anchor[i]));
        }

        let c_prev = (1.0 - lambda) * a + beta;
        ws.u_prev.copy_from_slice(&ws.u);
        prox.minimize_into(
            &ws.lin,
            &[(&ws.u_hat, lambda * a), (&ws.u_prev, c_prev)],
            constraint,
            &mut ws.u,
        )?;
        for (ul, u) in ws.u_under.iter_mut().zip(&ws.u) {
            *ul = (1.0 - lambda) * *ul + lambda * u;
        }
    }
    Ok(())
}

/// Allocating convenience wrapper around [`acs_procedure`].
pub fn acs_solve(
    objective: &dyn AgentObjective,
    prox: &dyn ProxFunction,
    inner: &InnerSchedule,
    w: &[f64],
    anchor: &[f64],
    rng: &mut StreamRng,
) -> Result<AcsOutput> {
    let mut ws = AcsWorkspace::new(objective.dim());
    acs_procedure(objective, prox, inner, w, anchor, rng, &mut ws)?;
    Ok(AcsOutput {
        x: ws.u,
        x_under: ws.u_under,
    })
}
