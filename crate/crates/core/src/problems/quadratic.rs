//! Synthetic quadratic agents `f_i(x) = (q/2)|x - c_i|^2`.
//!
//! The centralized optimum is the mean of the centres, which makes these
//! the reference instances for rate and equivalence checks.

use std::sync::Arc;

use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::problems::{AgentObjective, Constraint, ProblemClassConstants, ProblemSet};
use crate::rng::StreamRng;
use crate::vecops;

#[derive(Clone, Debug, PartialEq)]
pub struct QuadraticAgent {
    center: Vec<f64>,
    q: f64,
    sigma: f64,
    constraint: Constraint,
}

impl QuadraticAgent {
    pub fn new(center: Vec<f64>, q: f64, sigma: f64) -> Result<Self> {
        if !(q > 0.0) {
            return Err(Error::invalid(format!("quadratic weight must be positive, got {q}")));
        }
        if !(sigma >= 0.0) {
            return Err(Error::invalid(format!("oracle noise must be >= 0, got {sigma}")));
        }
        Ok(QuadraticAgent {
            center,
            q,
            sigma,
            constraint: Constraint::Unconstrained,
        })
    }

    pub fn with_constraint(mut self, constraint: Constraint) -> Self {
        self.constraint = constraint;
        self
    }

    pub fn center(&self) -> &[f64] {
        &self.center
    }
}

impl AgentObjective for QuadraticAgent {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        0.5 * self.q * vecops::dist_sq(x, &self.center)
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        for ((o, xi), ci) in out.iter_mut().zip(x).zip(&self.center) {
            *o = self.q * (xi - ci);
        }
    }

    /// Exact gradient plus isotropic Gaussian noise with per-coordinate std
    /// `sigma / sqrt(d)`, so the noise has second moment `sigma^2`.
    fn sample_gradient(&self, x: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        self.subgradient(x, out);
        if self.sigma > 0.0 {
            let s = self.sigma / (self.dim() as f64).sqrt();
            for o in out.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *o += s * z;
            }
        }
    }

    fn constants(&self) -> ProblemClassConstants {
        ProblemClassConstants {
            mu: self.q,
            lip_l: self.q,
            lip_m: 0.0,
            sigma: self.sigma,
            growth_c: 1.0,
        }
    }

    fn constraint(&self) -> Constraint {
        self.constraint
    }

    fn exact_prox(&self, w: &[f64], anchor: &[f64], eta: f64) -> Option<Vec<f64>> {
        // first-order condition: w + q (x - c) + eta (x - anchor) = 0
        let denom = self.q + eta;
        let mut x: Vec<f64> = self
            .center
            .iter()
            .zip(anchor)
            .zip(w)
            .map(|((c, a), wi)| (self.q * c + eta * a - wi) / denom)
            .collect();
        self.constraint.project(&mut x);
        Some(x)
    }

    fn as_quadratic(&self) -> Option<(&[f64], f64)> {
        Some((&self.center, self.q))
    }
}

/// One quadratic agent per centre, all with weight `q` and oracle noise `sigma`.
pub fn make_quadratic_problem(centers: &[Vec<f64>], q: f64, sigma: f64) -> Result<ProblemSet> {
    let d = centers
        .first()
        .ok_or_else(|| Error::invalid("need at least one centre"))?
        .len();
    let mut agents: Vec<Arc<dyn AgentObjective>> = Vec::with_capacity(centers.len());
    for c in centers {
        Error::check_dim(d, c.len())?;
        agents.push(Arc::new(QuadraticAgent::new(c.clone(), q, sigma)?));
    }
    ProblemSet::new(agents)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::aux_stream;

    #[test]
    fn value_and_gradient_at_center() {
        let a = QuadraticAgent::new(vec![1.0, -2.0], 3.0, 0.0).unwrap();
        let mut g = vec![9.0; 2];
        a.sample_gradient(&[1.0, -2.0], &mut aux_stream(0), &mut g);
        assert_eq!(g, vec![0.0, 0.0]);
        assert_eq!(a.value(&[1.0, -2.0]), 0.0);
        assert_eq!(a.value(&[2.0, -2.0]), 1.5);
    }

    #[test]
    fn nonpositive_weight_rejected() {
        assert!(make_quadratic_problem(&[vec![0.0]], 0.0, 0.0).is_err());
        assert!(make_quadratic_problem(&[vec![0.0]], -1.0, 0.0).is_err());
    }

    #[test]
    fn exact_prox_satisfies_first_order_condition() {
        let a = QuadraticAgent::new(vec![2.0], 1.0, 0.0).unwrap();
        let x = a.exact_prox(&[0.0], &[0.0], 4.0).unwrap();
        assert!((x[0] - 0.4).abs() < 1e-15);
        let x = a.exact_prox(&[0.5], &[1.0], 2.0).unwrap();
        assert!((0.5 + (x[0] - 2.0) + 2.0 * (x[0] - 1.0)).abs() < 1e-15);
    }

    #[test]
    fn constants_follow_weight() {
        let p = make_quadratic_problem(&[vec![0.0], vec![2.0]], 2.5, 0.7).unwrap();
        let c = p.constants();
        assert_eq!((c.mu, c.lip_l, c.lip_m, c.sigma, c.growth_c), (2.5, 2.5, 0.0, 0.7, 1.0));
    }
}
