//! Asynchronous accelerated stochastic decentralized communication sliding:
//! the primal-dual outer loop with the exact prox replaced by the ACS inner
//! loop, tracking both `x` and the sliding sequence `x_under`.

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::problems::{Euclidean, ProblemSet, ProxFunction};
use crate::rng::oracle_stream;
use crate::schedules::{InnerSchedule, OuterSchedule, Regime};
use crate::solver::acs::{acs_procedure, AcsWorkspace};
use crate::solver::{
    check_start, count_iteration, dual_update, run, Activation, LaggedVec, NetworkState, RunOptions, RunOutput,
    Solver,
};

pub struct AasdcsSolver<'a> {
    topo: &'a Topology,
    problems: &'a ProblemSet,
    sched: &'a OuterSchedule,
    prox: Box<dyn ProxFunction>,
    seed: u64,
    state: NetworkState,
    x_under: Vec<LaggedVec>,
    v: Vec<f64>,
    delta: Vec<f64>,
    w: Vec<f64>,
    ws: AcsWorkspace,
}

impl<'a> AasdcsSolver<'a> {
    /// `seed` keys the per-iteration oracle streams; activations are drawn
    /// by the caller.
    pub fn new(
        topo: &'a Topology,
        problems: &'a ProblemSet,
        sched: &'a OuterSchedule,
        x0: Vec<Vec<f64>>,
        seed: u64,
    ) -> Result<Self> {
        if sched.regime == Regime::Adpd || sched.inner_steps.is_none() {
            return Err(Error::invalid(format!(
                "sliding solver needs a sliding schedule, got {}",
                sched.regime.name()
            )));
        }
        check_start(topo, problems, sched, &x0)?;
        let d = problems.dim();
        Ok(AasdcsSolver {
            topo,
            problems,
            sched,
            prox: Box::new(Euclidean),
            seed,
            x_under: x0.iter().cloned().map(LaggedVec::new).collect(),
            state: NetworkState::new(x0),
            v: vec![0.0; d],
            delta: vec![0.0; d],
            w: vec![0.0; d],
            ws: AcsWorkspace::new(d),
        })
    }

    pub fn with_prox(mut self, prox: Box<dyn ProxFunction>) -> Self {
        self.prox = prox;
        self
    }

    pub fn x_under(&self) -> &[LaggedVec] {
        &self.x_under
    }

    fn inner(&self, k: usize) -> InnerSchedule {
        InnerSchedule {
            steps: self.sched.inner(k).unwrap_or(0),
            smoothness: self.sched.inner_smoothness,
            mu: self.sched.inner_mu,
            eta: self.sched.eta(k),
        }
    }
}

impl Solver for AasdcsSolver<'_> {
    fn schedule(&self) -> &OuterSchedule {
        self.sched
    }

    fn problems(&self) -> &ProblemSet {
        self.problems
    }

    fn topology(&self) -> &Topology {
        self.topo
    }

    fn state(&self) -> &NetworkState {
        &self.state
    }

    fn averaged_iterates(&self) -> &[LaggedVec] {
        &self.x_under
    }

    fn step_with(&mut self, k: usize, act: Activation) -> Result<()> {
        let alpha = self.sched.alpha(k);
        let m = self.state.xs.len() as f64;
        let (xs, xus) = (&self.state.xs, &self.x_under);
        // xtilde = alpha [m xu^{k-1} - (m-1) xu^{k-2} - x^{k-2}] + x^{k-1}, only on N_{i_k}
        self.topo.apply_row_with(act.dual_agent, &mut self.v, |l, buf| {
            let (x1, x2) = (xs[l].current(), xs[l].two_back(k));
            let (u1, u2) = (xus[l].current(), xus[l].two_back(k));
            for i in 0..buf.len() {
                buf[i] = alpha * (m * u1[i] - (m - 1.0) * u2[i] - x2[i]) + x1[i];
            }
        });
        dual_update(
            self.topo,
            &mut self.state,
            act,
            self.sched.tau(k),
            &self.v,
            &mut self.delta,
            &mut self.w,
        );

        let j = act.primal_agent;
        let inner = self.inner(k);
        let mut rng = oracle_stream(self.seed, k);
        acs_procedure(
            self.problems.agent(j),
            self.prox.as_ref(),
            &inner,
            &self.w,
            self.state.xs[j].current(),
            &mut rng,
            &mut self.ws,
        )?;
        self.state.xs[j].set(k, &self.ws.u);
        self.x_under[j].set(k, &self.ws.u_under);
        self.state.counters.grad_evals += inner.steps as u64;
        count_iteration(self.topo, &mut self.state.counters, act);
        Ok(())
    }
}

/// Runs the full schedule from `x0` and returns the ergodic average of the
/// sliding sequence `x_under` with its trace.
pub fn aasdcs_run(
    topo: &Topology,
    problems: &ProblemSet,
    sched: &OuterSchedule,
    x0: Vec<Vec<f64>>,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    let mut solver = AasdcsSolver::new(topo, problems, sched, x0, seed)?;
    run(&mut solver, seed, opts)
}
