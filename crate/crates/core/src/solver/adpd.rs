//! Asynchronous decentralized primal-dual method with exact local prox steps.

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::problems::ProblemSet;
use crate::schedules::{OuterSchedule, Regime};
use crate::solver::{
    check_start, count_iteration, dual_update, run, Activation, LaggedVec, NetworkState, RunOptions, RunOutput,
    Solver,
};

pub struct AdpdSolver<'a> {
    topo: &'a Topology,
    problems: &'a ProblemSet,
    sched: &'a OuterSchedule,
    state: NetworkState,
    v: Vec<f64>,
    delta: Vec<f64>,
    w: Vec<f64>,
}

impl<'a> AdpdSolver<'a> {
    /// Fails with [`Error::UnsupportedProblem`] unless every agent has a
    /// closed-form prox.
    pub fn new(
        topo: &'a Topology,
        problems: &'a ProblemSet,
        sched: &'a OuterSchedule,
        x0: Vec<Vec<f64>>,
    ) -> Result<Self> {
        if sched.regime != Regime::Adpd {
            return Err(Error::invalid(format!(
                "exact-prox solver needs the adpd schedule, got {}",
                sched.regime.name()
            )));
        }
        if !problems.supports_exact_prox() {
            return Err(Error::UnsupportedProblem(
                "the exact-prox method needs objectives with a closed-form prox; use aasdcs".into(),
            ));
        }
        check_start(topo, problems, sched, &x0)?;
        let d = problems.dim();
        Ok(AdpdSolver {
            topo,
            problems,
            sched,
            state: NetworkState::new(x0),
            v: vec![0.0; d],
            delta: vec![0.0; d],
            w: vec![0.0; d],
        })
    }
}

impl Solver for AdpdSolver<'_> {
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
        &self.state.xs
    }

    fn step_with(&mut self, k: usize, act: Activation) -> Result<()> {
        let alpha = self.sched.alpha(k);
        let xs = &self.state.xs;
        // xtilde = alpha (x^{k-1} - x^{k-2}) + x^{k-1}, only on N_{i_k}
        self.topo.apply_row_with(act.dual_agent, &mut self.v, |l, buf| {
            let (cur, back) = (xs[l].current(), xs[l].two_back(k));
            for ((b, c), p) in buf.iter_mut().zip(cur).zip(back) {
                *b = alpha * (c - p) + c;
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
        let x_new = self
            .problems
            .agent(j)
            .exact_prox(&self.w, self.state.xs[j].current(), self.sched.eta(k))
            .ok_or_else(|| Error::UnsupportedProblem(format!("agent {j} has no closed-form prox")))?;
        self.state.xs[j].set(k, &x_new);
        self.state.counters.prox_solves += 1;
        count_iteration(self.topo, &mut self.state.counters, act);
        Ok(())
    }
}

/// Runs the full schedule from `x0` and returns the ergodic average
/// `(sum_{k<N} x^k + m x^N) / (N + m)` with its trace.
pub fn adpd_run(
    topo: &Topology,
    problems: &ProblemSet,
    sched: &OuterSchedule,
    x0: Vec<Vec<f64>>,
    seed: u64,
    opts: RunOptions,
) -> Result<RunOutput> {
    let mut solver = AdpdSolver::new(topo, problems, sched, x0)?;
    run(&mut solver, seed, opts)
}
