//! Agent objectives, stochastic oracles and the shipped problem families.
//!
//! Every agent objective belongs to the class
//!
//! ```text
//! (mu/2)|x-y|^2 <= f(x) - f(y) - <f'(y), x-y> <= (L/2)|x-y|^2 + M|x-y|
//! ```
//!
//! and exposes a stochastic first-order oracle whose noise has second moment
//! at most `sigma^2`.

mod dataset;
mod prox;
mod quadratic;
mod svm;

use std::sync::Arc;

pub use dataset::{load_libsvm, load_libsvm_with_dim, Dataset, Sample, SparseVector};
pub use prox::{bregman_prox_step, Euclidean, ProxFunction};
pub use quadratic::{make_quadratic_problem, QuadraticAgent};
pub use svm::{hinge_subgradient, hinge_value, make_svm_problem, Regularizer, RegularizerKind, SvmAgent};

use crate::error::{Error, Result};
use crate::rng::StreamRng;
use crate::vecops;

/// Regularity constants `(mu, L, M, sigma, C)` of an objective.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemClassConstants {
    pub mu: f64,
    pub lip_l: f64,
    pub lip_m: f64,
    pub sigma: f64,
    pub growth_c: f64,
}

impl ProblemClassConstants {
    pub fn new(mu: f64, lip_l: f64, lip_m: f64, sigma: f64, growth_c: f64) -> Result<Self> {
        let c = ProblemClassConstants {
            mu,
            lip_l,
            lip_m,
            sigma,
            growth_c,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("mu", self.mu),
            ("L", self.lip_l),
            ("M", self.lip_m),
            ("sigma", self.sigma),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::invalid(format!("class constant {name} must be finite and >= 0, got {v}")));
            }
        }
        if !(self.growth_c >= 1.0 && self.growth_c.is_finite()) {
            return Err(Error::invalid(format!(
                "prox growth constant must be >= 1, got {}",
                self.growth_c
            )));
        }
        Ok(())
    }

    /// Constants valid for every agent at once: the weakest curvature and
    /// the largest smoothness, nonsmoothness and noise.
    pub fn combine(all: impl IntoIterator<Item = ProblemClassConstants>) -> Option<Self> {
        all.into_iter().reduce(|a, b| ProblemClassConstants {
            mu: a.mu.min(b.mu),
            lip_l: a.lip_l.max(b.lip_l),
            lip_m: a.lip_m.max(b.lip_m),
            sigma: a.sigma.max(b.sigma),
            growth_c: a.growth_c.max(b.growth_c),
        })
    }

    /// `M^2 + sigma^2`, the numerator of the inner-budget formulas.
    pub fn noise_budget(&self) -> f64 {
        self.lip_m * self.lip_m + self.sigma * self.sigma
    }
}

/// Feasible set `X_i` of an agent.
#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Constraint {
    #[default]
    Unconstrained,
    /// Euclidean ball of the given radius around the origin.
    Ball { radius: f64 },
}

impl Constraint {
    pub fn project(&self, x: &mut [f64]) {
        if let Constraint::Ball { radius } = *self {
            let n = vecops::norm(x);
            if n > radius {
                vecops::scale(radius / n, x);
            }
        }
    }

    pub fn contains(&self, x: &[f64], slack: f64) -> bool {
        match *self {
            Constraint::Unconstrained => true,
            Constraint::Ball { radius } => vecops::norm(x) <= radius + slack,
        }
    }
}

/// Private objective `f_i` of one agent.
pub trait AgentObjective: Send + Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    /// Deterministic subgradient selection `f'(x)`, written into `out`.
    fn subgradient(&self, x: &[f64], out: &mut [f64]);

    /// One stochastic oracle call `G(x, xi)`, unbiased for `f'(x)`.
    fn sample_gradient(&self, x: &[f64], rng: &mut StreamRng, out: &mut [f64]);

    fn constants(&self) -> ProblemClassConstants;

    fn constraint(&self) -> Constraint {
        Constraint::Unconstrained
    }

    /// `argmin_{x in X} <w, x> + f(x) + eta * V(anchor, x)` in closed form,
    /// for objectives simple enough to have one.
    fn exact_prox(&self, _w: &[f64], _anchor: &[f64], _eta: f64) -> Option<Vec<f64>> {
        None
    }

    /// `(center, weight)` when `f(x) = (q/2)|x - c|^2`.
    fn as_quadratic(&self) -> Option<(&[f64], f64)> {
        None
    }
}

/// The per-agent objectives of one decentralized problem.
#[derive(Clone)]
pub struct ProblemSet {
    agents: Vec<Arc<dyn AgentObjective>>,
    dim: usize,
}

impl std::fmt::Debug for ProblemSet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("ProblemSet")
            .field("m", &self.agents.len())
            .field("dim", &self.dim)
            .finish()
    }
}

impl ProblemSet {
    pub fn new(agents: Vec<Arc<dyn AgentObjective>>) -> Result<Self> {
        let dim = agents
            .first()
            .ok_or_else(|| Error::invalid("problem needs at least one agent"))?
            .dim();
        for a in &agents {
            Error::check_dim(dim, a.dim())?;
        }
        Ok(ProblemSet { agents, dim })
    }

    pub fn m(&self) -> usize {
        self.agents.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn agent(&self, i: usize) -> &dyn AgentObjective {
        self.agents[i].as_ref()
    }

    pub fn agents(&self) -> impl Iterator<Item = &dyn AgentObjective> {
        self.agents.iter().map(|a| a.as_ref())
    }

    /// Constants holding uniformly across agents.
    pub fn constants(&self) -> ProblemClassConstants {
        ProblemClassConstants::combine(self.agents().map(|a| a.constants()))
            .expect("non-empty problem set")
    }

    /// `F(x) = sum_i f_i(x_i)` over the stacked agent copies.
    pub fn stacked_value(&self, xs: &[Vec<f64>]) -> Result<f64> {
        Error::check_dim(self.m(), xs.len())?;
        let mut total = 0.0;
        for (a, x) in self.agents().zip(xs) {
            Error::check_dim(self.dim, x.len())?;
            total += a.value(x);
        }
        Ok(total)
    }

    /// Centralized objective `sum_i f_i(x)` at one shared point.
    pub fn consensus_value(&self, x: &[f64]) -> f64 {
        self.agents().map(|a| a.value(x)).sum()
    }

    /// Subgradient of the centralized objective at `x`.
    pub fn consensus_subgradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut g = vec![0.0; self.dim];
        for a in self.agents() {
            a.subgradient(x, &mut g);
            vecops::axpy(1.0, &g, out);
        }
    }

    pub fn supports_exact_prox(&self) -> bool {
        let d = self.dim;
        let z = vec![0.0; d];
        self.agents().all(|a| a.exact_prox(&z, &z, 1.0).is_some())
    }
}
