//! Linear SVM agents: empirical hinge loss over a local shard plus an
//! `l1` or `l2` regularizer, sampled one example at a time.

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::problems::{AgentObjective, Dataset, ProblemClassConstants, ProblemSet, Sample, SparseVector};
use crate::rng::{aux_stream, StreamRng};
use crate::vecops;

/// Oracle draws used to estimate `sigma` at the origin.
pub const SIGMA_ESTIMATION_SAMPLES: usize = 1000;
const SIGMA_ESTIMATION_SEED: u64 = 0x5151_0000;

/// `max{0, 1 - v <x, u>}`
pub fn hinge_value(x: &[f64], v: f64, u: &SparseVector) -> f64 {
    (1.0 - v * u.dot(x)).max(0.0)
}

/// `-v u` while the margin is below one, zero once it reaches one.
pub fn hinge_subgradient(x: &[f64], v: f64, u: &SparseVector, out: &mut [f64]) {
    out.iter_mut().for_each(|o| *o = 0.0);
    if v * u.dot(x) < 1.0 {
        u.axpy_into(-v, out);
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Regularizer {
    /// `weight * |x|_1`
    L1 { weight: f64 },
    /// `(weight / 2) * |x|_2^2`
    L2 { weight: f64 },
}

impl Regularizer {
    fn value(&self, x: &[f64]) -> f64 {
        match *self {
            Regularizer::L1 { weight } => weight * x.iter().map(|v| v.abs()).sum::<f64>(),
            Regularizer::L2 { weight } => 0.5 * weight * vecops::norm_sq(x),
        }
    }

    fn add_subgradient(&self, x: &[f64], out: &mut [f64]) {
        match *self {
            Regularizer::L1 { weight } => {
                for (o, xi) in out.iter_mut().zip(x) {
                    if *xi != 0.0 {
                        *o += weight * xi.signum();
                    }
                }
            }
            Regularizer::L2 { weight } => vecops::axpy(weight, x, out),
        }
    }
}

/// `f(x) = (1/|S|) sum_{s in S} hinge(x; v_s, u_s) + r(x)`.
#[derive(Clone, Debug)]
pub struct SvmAgent {
    shard: Arc<[Sample]>,
    dim: usize,
    reg: Regularizer,
    constants: ProblemClassConstants,
}

impl SvmAgent {
    /// Builds the agent and estimates its class constants: `M` from the
    /// largest feature norm (plus one for the `l1` subgradient), `sigma` as
    /// the empirical oracle spread at the origin.
    pub fn new(shard: Vec<Sample>, dim: usize, reg: Regularizer) -> Result<Self> {
        if shard.is_empty() {
            return Err(Error::invalid("SVM agent needs a non-empty shard"));
        }
        let max_norm = shard.iter().map(|s| s.features.norm()).fold(0.0, f64::max);
        let (mu, lip_l, reg_bound) = match reg {
            Regularizer::L1 { .. } => (0.0, 0.0, 1.0),
            Regularizer::L2 { weight } => (weight, weight, 0.0),
        };
        let mut agent = SvmAgent {
            shard: shard.into(),
            dim,
            reg,
            constants: ProblemClassConstants {
                mu,
                lip_l,
                lip_m: max_norm + reg_bound,
                sigma: 0.0,
                growth_c: 1.0,
            },
        };
        agent.constants.sigma = agent.estimate_sigma();
        agent.constants.validate()?;
        Ok(agent)
    }

    pub fn shard_len(&self) -> usize {
        self.shard.len()
    }

    pub fn regularizer(&self) -> Regularizer {
        self.reg
    }

    fn estimate_sigma(&self) -> f64 {
        let zero = vec![0.0; self.dim];
        let mut mean = vec![0.0; self.dim];
        self.subgradient(&zero, &mut mean);
        let mut rng = aux_stream(SIGMA_ESTIMATION_SEED);
        let mut g = vec![0.0; self.dim];
        let mut second = 0.0;
        for _ in 0..SIGMA_ESTIMATION_SAMPLES {
            self.sample_gradient(&zero, &mut rng, &mut g);
            second += vecops::dist_sq(&g, &mean);
        }
        (second / SIGMA_ESTIMATION_SAMPLES as f64).sqrt()
    }
}

impl AgentObjective for SvmAgent {
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, x: &[f64]) -> f64 {
        let loss: f64 = self
            .shard
            .iter()
            .map(|s| hinge_value(x, s.label, &s.features))
            .sum();
        loss / self.shard.len() as f64 + self.reg.value(x)
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let inv = 1.0 / self.shard.len() as f64;
        for s in self.shard.iter() {
            if s.label * s.features.dot(x) < 1.0 {
                s.features.axpy_into(-s.label * inv, out);
            }
        }
        self.reg.add_subgradient(x, out);
    }

    fn sample_gradient(&self, x: &[f64], rng: &mut StreamRng, out: &mut [f64]) {
        let s = &self.shard[rng.random_range(0..self.shard.len())];
        hinge_subgradient(x, s.label, &s.features, out);
        self.reg.add_subgradient(x, out);
    }

    fn constants(&self) -> ProblemClassConstants {
        self.constants
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegularizerKind {
    L1,
    L2,
}

/// Splits `data` evenly over the agents of `topo`. The regularizer weight is
/// `1/|S_i|` per agent unless overridden.
pub fn make_svm_problem(
    data: &Dataset,
    topo: &Topology,
    kind: RegularizerKind,
    weight_override: Option<f64>,
) -> Result<ProblemSet> {
    if let Some(w) = weight_override {
        if !(w > 0.0) {
            return Err(Error::invalid(format!("regularizer weight must be positive, got {w}")));
        }
    }
    let parts = data.partition(topo.m())?;
    let mut agents: Vec<Arc<dyn AgentObjective>> = Vec::with_capacity(parts.len());
    for shard in parts {
        let weight = weight_override.unwrap_or(1.0 / shard.len() as f64);
        let reg = match kind {
            RegularizerKind::L1 => Regularizer::L1 { weight },
            RegularizerKind::L2 => Regularizer::L2 { weight },
        };
        let samples = shard.into_iter().map(|i| data.samples()[i].clone()).collect();
        agents.push(Arc::new(SvmAgent::new(samples, data.dim(), reg)?));
    }
    ProblemSet::new(agents)
}
