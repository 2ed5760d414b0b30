//! Experiment plumbing: build an instance from a config, run a seed sweep in
//! parallel, write one trace per seed and a checkpoint summary.

mod config;

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::Rng;
use rayon::prelude::*;

pub use config::{parse_seeds, Algorithm, ExperimentConfig, ProblemSpec, RawConfig, RegimeChoice, OUT_ENV, VALID_KEYS};

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::metrics::{centralized_reference, ReferenceMethod, ReferenceSolution, RunTrace};
use crate::problems::{load_libsvm, make_quadratic_problem, make_svm_problem, ProblemSet};
use crate::rng::aux_stream;
use crate::schedules::{
    aasdcs_convex_schedule, aasdcs_strong_schedule, adpd_schedule, validate_schedule, OuterSchedule, ScheduleOptions,
};
use crate::solver::{aasdcs_run, adpd_run, RunOptions};

pub const SUMMARY_HEADER: &str =
    "k,comm_rounds,grad_evals_mean,objective_mean,objective_std,feasibility_mean,feasibility_std,seeds";
pub const REFERENCE_FILE: &str = "reference.txt";

/// Everything a run needs, built once and shared by all seeds.
#[derive(Clone, Debug)]
pub struct Instance {
    pub topology: Topology,
    pub problems: ProblemSet,
    pub schedule: OuterSchedule,
}

impl Instance {
    pub fn start_point(&self) -> Vec<Vec<f64>> {
        vec![vec![0.0; self.problems.dim()]; self.topology.m()]
    }
}

/// `m` centres drawn uniformly from `[-scale, scale]^dim`.
pub fn quadratic_centers(m: usize, dim: usize, scale: f64, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = aux_stream(seed);
    (0..m)
        .map(|_| (0..dim).map(|_| rng.random_range(-scale..=scale)).collect())
        .collect()
}

pub fn build_problem(cfg: &ExperimentConfig, topology: &Topology) -> Result<ProblemSet> {
    match &cfg.problem {
        ProblemSpec::Quadratic {
            dim,
            q,
            center_seed,
            center_scale,
            sigma,
        } => {
            if *dim == 0 {
                return Err(Error::Config("dim must be >= 1".into()));
            }
            let centers = quadratic_centers(cfg.m, *dim, *center_scale, *center_seed);
            make_quadratic_problem(&centers, *q, *sigma)
        }
        ProblemSpec::Svm {
            regularizer,
            dataset,
            subsample,
            subsample_seed,
            reg_weight,
        } => {
            let mut data = load_libsvm(dataset)?;
            if let Some(count) = subsample {
                data = data.subsample(*count, *subsample_seed)?;
            }
            make_svm_problem(&data, topology, *regularizer, *reg_weight)
        }
    }
}

/// Builds topology, problem and schedule, and refuses schedules that fail
/// any condition of their convergence guarantee.
pub fn build_instance(cfg: &ExperimentConfig) -> Result<Instance> {
    let topology = Topology::build(cfg.topology, cfg.m)?;
    let problems = build_problem(cfg, &topology)?;
    let consts = problems.constants();
    let (m, d_max) = (topology.m(), topology.d_max());
    let opts = ScheduleOptions {
        d_const: cfg.d_const,
        inner_steps: cfg.inner_steps,
    };
    let schedule = match (cfg.algo, cfg.regime) {
        (Algorithm::Adpd, _) => {
            if !problems.supports_exact_prox() {
                return Err(Error::Config(
                    "algo=adpd requires an exact-prox problem (closed-form local prox)".into(),
                ));
            }
            adpd_schedule(m, d_max, cfg.n)?
        }
        (Algorithm::Aasdcs, RegimeChoice::Convex) => aasdcs_convex_schedule(m, d_max, cfg.n, &consts, opts)?,
        (Algorithm::Aasdcs, RegimeChoice::StronglyConvex) => {
            if !(consts.mu > 0.0) {
                return Err(Error::Config(format!(
                    "regime=strongly_convex requires mu > 0, but this problem has mu = {}",
                    consts.mu
                )));
            }
            aasdcs_strong_schedule(m, d_max, cfg.n, &consts, opts)?
        }
    };
    validate_schedule(&schedule, m, d_max, &consts).into_result()?;
    Ok(Instance {
        topology,
        problems,
        schedule,
    })
}

pub fn run_seed(instance: &Instance, algo: Algorithm, seed: u64, opts: RunOptions) -> Result<RunTrace> {
    let run = match algo {
        Algorithm::Adpd => adpd_run,
        Algorithm::Aasdcs => aasdcs_run,
    };
    Ok(run(
        &instance.topology,
        &instance.problems,
        &instance.schedule,
        instance.start_point(),
        seed,
        opts,
    )?
    .trace)
}

pub fn trace_path(out: &Path, algo: Algorithm, seed: u64) -> PathBuf {
    out.join(format!("{}_{seed}.csv", algo.name()))
}

/// Summary checkpoints: `log_every * 2^j` up to `N`, plus `N` itself.
pub fn checkpoints(n: usize, log_every: usize) -> Vec<usize> {
    let mut ks = Vec::new();
    let mut k = log_every;
    while k <= n {
        ks.push(k);
        k = k.saturating_mul(2);
    }
    if ks.last() != Some(&n) {
        ks.push(n);
    }
    ks
}

#[derive(Clone, Debug, PartialEq)]
pub struct SummaryRow {
    pub k: usize,
    pub comm_rounds: u64,
    pub grad_evals_mean: f64,
    pub objective_mean: f64,
    /// Sample standard deviation; zero for a single seed.
    pub objective_std: f64,
    pub feasibility_mean: f64,
    pub feasibility_std: f64,
    pub seeds: usize,
}

#[derive(Clone, Debug)]
pub struct ExperimentSummary {
    pub rows: Vec<SummaryRow>,
    pub traces: Vec<RunTrace>,
    pub trace_paths: Vec<PathBuf>,
    pub summary_path: PathBuf,
}

fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

/// Per-checkpoint seed means and standard deviations.
pub fn summarize(traces: &[RunTrace], checkpoints: &[usize]) -> Result<Vec<SummaryRow>> {
    if traces.is_empty() {
        return Err(Error::invalid("no traces to summarize"));
    }
    checkpoints
        .iter()
        .map(|&k| {
            let rows = traces
                .iter()
                .map(|t| {
                    t.at(k)
                        .ok_or_else(|| Error::invalid(format!("trace for seed {} has no row at k = {k}", t.seed)))
                })
                .collect::<Result<Vec<_>>>()?;
            let col = |f: fn(&crate::metrics::TraceRow) -> f64| rows.iter().map(|r| f(r)).collect::<Vec<_>>();
            let (objective_mean, objective_std) = mean_std(&col(|r| r.objective));
            let (feasibility_mean, feasibility_std) = mean_std(&col(|r| r.feasibility));
            Ok(SummaryRow {
                k,
                comm_rounds: rows[0].comm_rounds,
                grad_evals_mean: mean_std(&col(|r| r.grad_evals as f64)).0,
                objective_mean,
                objective_std,
                feasibility_mean,
                feasibility_std,
                seeds: rows.len(),
            })
        })
        .collect()
}

pub fn summary_csv(rows: &[SummaryRow]) -> String {
    let mut s = String::from(SUMMARY_HEADER);
    s.push('\n');
    for r in rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{},{},{}",
            r.k,
            r.comm_rounds,
            r.grad_evals_mean,
            r.objective_mean,
            r.objective_std,
            r.feasibility_mean,
            r.feasibility_std,
            r.seeds
        );
    }
    s
}

/// Builds the instance, runs every seed in parallel, writes
/// `<out>/<algo>_<seed>.csv` per seed and `<out>/summary.csv`.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentSummary> {
    let instance = build_instance(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    let opts = RunOptions {
        log_every: cfg.log_every,
        record_wall_time: cfg.wall_time,
    };
    let traces = cfg
        .seeds
        .par_iter()
        .map(|&seed| -> Result<RunTrace> {
            let trace = run_seed(&instance, cfg.algo, seed, opts)?;
            trace.write_csv(&trace_path(&cfg.out, cfg.algo, seed))?;
            Ok(trace)
        })
        .collect::<Result<Vec<_>>>()?;
    let rows = summarize(&traces, &checkpoints(cfg.n, cfg.log_every))?;
    let summary_path = cfg.out.join("summary.csv");
    std::fs::write(&summary_path, summary_csv(&rows))?;
    Ok(ExperimentSummary {
        rows,
        trace_paths: cfg.seeds.iter().map(|&s| trace_path(&cfg.out, cfg.algo, s)).collect(),
        traces,
        summary_path,
    })
}

/// Centralized reference for the configured problem: closed form for
/// quadratics, long-run subgradient otherwise.
pub fn compute_reference(cfg: &ExperimentConfig) -> Result<ReferenceSolution> {
    let topology = Topology::build(cfg.topology, cfg.m)?;
    let problems = build_problem(cfg, &topology)?;
    let method = match cfg.problem {
        ProblemSpec::Quadratic { .. } => ReferenceMethod::ClosedForm,
        ProblemSpec::Svm { .. } => ReferenceMethod::LongRunSubgradient,
    };
    centralized_reference(&problems, method, cfg.reference_budget, cfg.reference_tol)
}

/// Computes the reference and caches it as `<out>/reference.txt`.
pub fn cache_reference(cfg: &ExperimentConfig) -> Result<(ReferenceSolution, PathBuf)> {
    let reference = compute_reference(cfg)?;
    std::fs::create_dir_all(&cfg.out)?;
    let path = cfg.out.join(REFERENCE_FILE);
    std::fs::write(&path, reference.to_text())?;
    Ok((reference, path))
}

pub fn load_reference(path: &Path) -> Result<ReferenceSolution> {
    ReferenceSolution::from_text(&std::fs::read_to_string(path)?)
}
