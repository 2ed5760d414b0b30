//! The two asynchronous primal-dual solvers and their shared run loop.
//!
//! A run is a serial randomized process: at iteration `k` one agent `i_k`
//! updates its dual and one agent `j_k` updates its primal block; every other
//! block is carried forward untouched. Asynchrony lives in the activation
//! draws, not in threads.

mod aasdcs;
mod acs;
mod adpd;

use std::time::Instant;

use rand::Rng;

pub use aasdcs::{aasdcs_run, AasdcsSolver};
pub use acs::{acs_procedure, acs_solve, AcsOutput, AcsWorkspace};
pub use adpd::{adpd_run, AdpdSolver};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::metrics::{RunTrace, TraceRow};
use crate::problems::ProblemSet;
use crate::rng::{activation_stream, StreamRng};
use crate::schedules::{OuterSchedule, WeightFamily};
use crate::vecops;

/// One agent's vector together with the value it held before its most
/// recent change, so `x^{k-2}` is available without storing history.
#[derive(Clone, Debug, PartialEq)]
pub struct LaggedVec {
    cur: Vec<f64>,
    prev: Vec<f64>,
    changed_at: usize,
}

impl LaggedVec {
    /// Starts with `x^{-1} = x^0`.
    pub fn new(x0: Vec<f64>) -> Self {
        LaggedVec {
            prev: x0.clone(),
            cur: x0,
            changed_at: 0,
        }
    }

    /// `x^{k-1}` as read during iteration `k`.
    pub fn current(&self) -> &[f64] {
        &self.cur
    }

    /// `x^{k-2}` as read during iteration `k`.
    pub fn two_back(&self, k: usize) -> &[f64] {
        if self.changed_at + 1 == k {
            &self.prev
        } else {
            &self.cur
        }
    }

    /// Records `x^k = value`.
    pub fn set(&mut self, k: usize, value: &[f64]) {
        std::mem::swap(&mut self.cur, &mut self.prev);
        self.cur.copy_from_slice(value);
        self.changed_at = k;
    }

    pub fn last_change(&self) -> usize {
        self.changed_at
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct Counters {
    pub iterations: usize,
    pub comm_rounds: u64,
    /// Vector transfers, `|N_{i_k}| + |N_{j_k}|` per iteration.
    pub messages: u64,
    pub grad_evals: u64,
    pub prox_solves: u64,
}

/// Primal and dual blocks shared by both solvers.
#[derive(Clone, Debug, PartialEq)]
pub struct NetworkState {
    pub xs: Vec<LaggedVec>,
    pub ys: Vec<Vec<f64>>,
    pub counters: Counters,
}

impl NetworkState {
    /// `x^0 = x0`, `y^0 = 0`.
    pub fn new(x0: Vec<Vec<f64>>) -> Self {
        let d = x0.first().map_or(0, Vec::len);
        NetworkState {
            ys: vec![vec![0.0; d]; x0.len()],
            xs: x0.into_iter().map(LaggedVec::new).collect(),
            counters: Counters::default(),
        }
    }

    pub fn x(&self) -> Vec<Vec<f64>> {
        self.xs.iter().map(|x| x.current().to_vec()).collect()
    }
}

/// The agents activated at one iteration.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Activation {
    pub dual_agent: usize,
    pub primal_agent: usize,
}

pub fn draw_activation(m: usize, rng: &mut StreamRng) -> Activation {
    let dual_agent = rng.random_range(0..m);
    let primal_agent = rng.random_range(0..m);
    Activation {
        dual_agent,
        primal_agent,
    }
}

/// One step of a primal-dual method driven by a shared activation stream.
pub trait Solver {
    fn schedule(&self) -> &OuterSchedule;

    fn problems(&self) -> &ProblemSet;

    fn topology(&self) -> &Topology;

    fn state(&self) -> &NetworkState;

    /// The sequence whose weighted average is reported.
    fn averaged_iterates(&self) -> &[LaggedVec];

    /// Iteration `k` with the given activation.
    fn step_with(&mut self, k: usize, act: Activation) -> Result<()>;

    /// Iteration `k`, drawing `(i_k, j_k)` from `rng`.
    fn step(&mut self, k: usize, rng: &mut StreamRng) -> Result<Activation> {
        let act = draw_activation(self.state().xs.len(), rng);
        self.step_with(k, act)?;
        Ok(act)
    }
}

/// Dual half-step shared by both methods: `y_i += v / tau`, then
/// `w = sum_{l in N_j} L_jl ytilde_l` with `ytilde = y^k + (m-1)(y^k - y^{k-1})`.
///
/// `v` must already hold the Laplacian row of agent `i` applied to the
/// extrapolated primal. Returns `w` in `w_out`.
pub(crate) fn dual_update(
    topo: &Topology,
    state: &mut NetworkState,
    act: Activation,
    tau: f64,
    v: &[f64],
    delta: &mut [f64],
    w_out: &mut [f64],
) {
    let m = state.xs.len();
    let i = act.dual_agent;
    for (dl, vl) in delta.iter_mut().zip(v) {
        *dl = vl / tau;
    }
    vecops::axpy(1.0, delta, &mut state.ys[i]);
    let extra = (m - 1) as f64;
    let ys = &state.ys;
    topo.apply_row_with(act.primal_agent, w_out, |l, buf| {
        buf.copy_from_slice(&ys[l]);
        if l == i {
            vecops::axpy(extra, delta, buf);
        }
    });
}

pub(crate) fn count_iteration(topo: &Topology, counters: &mut Counters, act: Activation) {
    counters.iterations += 1;
    counters.comm_rounds += 2;
    counters.messages += (topo.neighbors(act.dual_agent).len() + topo.neighbors(act.primal_agent).len()) as u64;
}

pub(crate) fn check_start(topo: &Topology, problems: &ProblemSet, sched: &OuterSchedule, x0: &[Vec<f64>]) -> Result<()> {
    Error::check_dim(topo.m(), problems.m())?;
    Error::check_dim(topo.m(), sched.m)?;
    Error::check_dim(topo.m(), x0.len())?;
    for x in x0 {
        Error::check_dim(problems.dim(), x.len())?;
    }
    Ok(())
}

/// Prefix ergodic average `xbar^n = (sum_{k<n} a_k x^k + m c_n x^n) / Z(n)`
/// for any `n`, built from weights that do not depend on the final budget.
#[derive(Clone, Debug)]
pub struct ErgodicAverage {
    family: WeightFamily,
    m: usize,
    interior: Vec<Vec<f64>>,
    pushed: usize,
}

impl ErgodicAverage {
    pub fn new(family: WeightFamily, m: usize, d: usize) -> Self {
        ErgodicAverage {
            family,
            m,
            interior: vec![vec![0.0; d]; m],
            pushed: 0,
        }
    }

    /// Average over iterates `0..=n` where `xs` is `x^n` and `n` is the
    /// number of earlier calls to [`ErgodicAverage::push`].
    pub fn average_with_last(&self, xs: &[LaggedVec]) -> Vec<Vec<f64>> {
        let n = self.pushed;
        if n == 0 {
            return xs.iter().map(|x| x.current().to_vec()).collect();
        }
        let z = self.family.normalizer(n, self.m);
        let last = self.family.terminal_weight(n, self.m);
        self.interior
            .iter()
            .zip(xs)
            .map(|(acc, x)| {
                let mut out = acc.clone();
                vecops::axpy(last, x.current(), &mut out);
                vecops::scale(1.0 / z, &mut out);
                out
            })
            .collect()
    }

    /// Folds `x^n` into the interior sum.
    pub fn push(&mut self, xs: &[LaggedVec]) {
        let a = self.family.interior_weight(self.pushed, self.m);
        for (acc, x) in self.interior.iter_mut().zip(xs) {
            vecops::axpy(a, x.current(), acc);
        }
        self.pushed += 1;
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct RunOptions {
    /// Trace rows at `k = 0`, every multiple of this, and `k = N`.
    pub log_every: usize,
    /// Writes `0` in the wall-time column when false, making traces
    /// byte-identical across repeats.
    pub record_wall_time: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        RunOptions {
            log_every: 1,
            record_wall_time: false,
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunOutput {
    /// Ergodic average `xbar^N`.
    pub xbar: Vec<Vec<f64>>,
    /// Last primal iterate `x^N`.
    pub last: Vec<Vec<f64>>,
    pub trace: RunTrace,
    pub counters: Counters,
}

/// Runs `N` iterations from the solver's current state with activations
/// drawn from the seed's activation stream.
pub fn run<S: Solver>(solver: &mut S, seed: u64, opts: RunOptions) -> Result<RunOutput> {
    if opts.log_every == 0 {
        return Err(Error::invalid("log_every must be >= 1"));
    }
    let n = solver.schedule().n;
    let m = solver.schedule().m;
    let family = solver.schedule().family;
    let theta = solver.schedule().theta.clone();
    let d = solver.problems().dim();
    let mut rng = activation_stream(seed);
    let mut avg = ErgodicAverage::new(family, m, d);
    let mut theta_acc = vec![vec![0.0; d]; m];
    let start = Instant::now();
    let mut trace = RunTrace {
        seed,
        rows: Vec::new(),
    };

    let mut log = |k: usize, solver: &S, avg: &ErgodicAverage| -> Result<Vec<Vec<f64>>> {
        let xbar = avg.average_with_last(solver.averaged_iterates());
        let c = solver.state().counters;
        trace.rows.push(TraceRow {
            k,
            comm_rounds: c.comm_rounds,
            grad_evals: c.grad_evals,
            objective: solver.problems().stacked_value(&xbar)?,
            feasibility: solver.topology().feasibility_residual(&xbar)?,
            wall_seconds: if opts.record_wall_time {
                start.elapsed().as_secs_f64()
            } else {
                0.0
            },
        });
        Ok(xbar)
    };

    let mut xbar = log(0, solver, &avg)?;
    accumulate_theta(&mut theta_acc, theta[0], solver.averaged_iterates());
    for k in 1..=n {
        avg.push(solver.averaged_iterates());
        solver.step(k, &mut rng)?;
        accumulate_theta(&mut theta_acc, theta[k], solver.averaged_iterates());
        if k % opts.log_every == 0 || k == n {
            xbar = log(k, solver, &avg)?;
        }
    }
    debug_assert!(
        xbar.iter().flatten().zip(theta_acc.iter().flatten()).all(|(a, b)| (a - b).abs()
            <= 1e-9 * (1.0 + a.abs().max(b.abs()))),
        "prefix average disagrees with the theta-weighted average"
    );
    Ok(RunOutput {
        xbar,
        last: solver.state().x(),
        trace,
        counters: solver.state().counters,
    })
}

fn accumulate_theta(acc: &mut [Vec<f64>], theta: f64, xs: &[LaggedVec]) {
    for (a, x) in acc.iter_mut().zip(xs) {
        vecops::axpy(theta, x.current(), a);
    }
}
