//! Asynchronous decentralized primal-dual optimization over simulated
//! multi-agent networks.
//!
//! Two solvers share one outer loop: [`solver::AdpdSolver`] solves each local
//! proximal subproblem exactly, while [`solver::AasdcsSolver`] replaces the exact
//! prox with an accelerated stochastic inner loop that reuses one dual
//! message for `T_k` gradient steps (communication sliding). Communication
//! rounds and stochastic gradient evaluations are counted separately.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: topologies and their Laplacian encoding of consensus.
//! - [`problems`]: agent objectives, stochastic oracles, Bregman prox steps,
//!   SVM and quadratic instances, LIBSVM loading.
//! - [`schedules`]: outer/inner parameter sequences and their validators.
//! - [`solver`]: the two algorithms and the inner ACS procedure.
//! - [`metrics`]: references, gaps, feasibility and rate fitting.
//! - [`harness`]: config parsing, seed sweeps and CSV output.

// `!(x > 0.0)` is used on purpose: it also rejects NaN. Index loops mirror
// the coordinate formulas.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod error;
pub mod graph;
pub mod harness;
pub mod metrics;
pub mod problems;
pub mod rng;
pub mod schedules;
pub mod solver;
pub mod vecops;

pub use error::{Error, Result};
