//! Fixtures and invariant checks shared by the integration and acceptance
//! targets. Checks return `Err(description)` instead of panicking so the
//! acceptance runner can report them.

#![allow(dead_code, clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

use std::path::Path;
use std::sync::Arc;

use asyncpd::graph::{Topology, TopologyKind};
use asyncpd::harness::quadratic_centers;
use asyncpd::metrics::{gap_function_q, perturbed_gap, PrimalDual};
use asyncpd::problems::{
    make_quadratic_problem, AgentObjective, ProblemClassConstants, ProblemSet, QuadraticAgent,
};
use asyncpd::rng::{aux_stream, oracle_stream, StreamRng};
use asyncpd::schedules::{
    aasdcs_convex_schedule, aasdcs_strong_schedule, adpd_schedule, validate_schedule, InnerSchedule, OuterSchedule,
    ScheduleOptions, WeightFamily,
};
use asyncpd::solver::{
    acs_solve, draw_activation, Activation, AasdcsSolver, AdpdSolver, RunOptions, Solver,
};
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

pub type Check = std::result::Result<(), String>;

macro_rules! ensure {
    ($cond:expr, $($msg:tt)+) => {
        if !$cond {
            return Err(format!($($msg)+));
        }
    };
}

/// The quadratic benchmark: `m = 5` ring, `d = 2`, unit weight.
pub fn ring_quadratic(sigma: f64) -> (Topology, ProblemSet) {
    let m = 5;
    let topo = Topology::build(TopologyKind::Ring, m).unwrap();
    let centers = quadratic_centers(m, 2, 1.0, 0);
    (topo, make_quadratic_problem(&centers, 1.0, sigma).unwrap())
}

pub fn zeros(m: usize, d: usize) -> Vec<Vec<f64>> {
    vec![vec![0.0; d]; m]
}

pub fn final_only(n: usize) -> RunOptions {
    RunOptions {
        log_every: n,
        record_wall_time: false,
    }
}

pub fn mean(values: &[f64]) -> f64 {
    values.iter().sum::<f64>() / values.len() as f64
}

/// LIBSVM text with the shape of ijcnn1: 22 features, about 13 present per
/// line, labels `-1/+1` from a noisy linear rule.
pub fn write_synthetic_ijcnn1(path: &Path, rows: usize, seed: u64) {
    let mut rng = aux_stream(seed);
    let truth: Vec<f64> = (0..22).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut text = String::new();
    for _ in 0..rows {
        let mut feats = Vec::new();
        let mut score = 0.0;
        for (i, w) in truth.iter().enumerate() {
            if rng.random_bool(0.6) {
                let v: f64 = rng.random_range(-1.0..1.0);
                score += w * v;
                feats.push(format!("{}:{v:.6}", i + 1));
            }
        }
        let noise: f64 = StandardNormal.sample(&mut rng);
        let label = if score + 0.3 * noise >= 0.0 { "+1" } else { "-1" };
        text.push_str(label);
        for f in feats {
            text.push(' ');
            text.push_str(&f);
        }
        text.push('\n');
    }
    std::fs::write(path, text).unwrap();
}

/// `f(u) = (1/2) sum_i s_i (u_i - c_i)^2` with spectrum `s` spread over
/// `(0, 1]`: smooth, barely strongly convex.
#[derive(Clone, Debug)]
pub struct SpreadQuadratic {
    pub spectrum: Vec<f64>,
    pub center: Vec<f64>,
}

impl SpreadQuadratic {
    pub fn new(d: usize) -> Self {
        SpreadQuadratic {
            spectrum: (0..d).map(|i| ((i + 1) as f64 / d as f64).powi(4)).collect(),
            center: (0..d).map(|i| if i % 2 == 0 { 1.0 } else { -1.0 }).collect(),
        }
    }

    /// Minimizer of `<w, u> + f(u) + (eta/2)|u - anchor|^2`.
    pub fn composite_minimizer(&self, w: &[f64], anchor: &[f64], eta: f64) -> Vec<f64> {
        (0..self.center.len())
            .map(|i| (self.spectrum[i] * self.center[i] - w[i] + eta * anchor[i]) / (self.spectrum[i] + eta))
            .collect()
    }

    pub fn composite_value(&self, w: &[f64], anchor: &[f64], eta: f64, u: &[f64]) -> f64 {
        let lin: f64 = w.iter().zip(u).map(|(a, b)| a * b).sum();
        let prox: f64 = anchor.iter().zip(u).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        lin + self.value(u) + 0.5 * eta * prox
    }
}

impl AgentObjective for SpreadQuadratic {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        (0..x.len())
            .map(|i| 0.5 * self.spectrum[i] * (x[i] - self.center[i]).powi(2))
            .sum()
    }

    fn subgradient(&self, x: &[f64], out: &mut [f64]) {
        for i in 0..x.len() {
            out[i] = self.spectrum[i] * (x[i] - self.center[i]);
        }
    }

    fn sample_gradient(&self, x: &[f64], _rng: &mut StreamRng, out: &mut [f64]) {
        self.subgradient(x, out);
    }

    fn constants(&self) -> ProblemClassConstants {
        ProblemClassConstants {
            mu: self.spectrum[0],
            lip_l: 1.0,
            lip_m: 0.0,
            sigma: 0.0,
            growth_c: 1.0,
        }
    }
}

// ---------------------------------------------------------------------------
// Invariant checks

pub fn check_laplacian_properties() -> Check {
    let kinds = [
        (TopologyKind::Ring, 7),
        (TopologyKind::Path, 6),
        (TopologyKind::Complete, 5),
        (TopologyKind::ErdosRenyi { p: 0.3, seed: 11 }, 12),
        (TopologyKind::ErdosRenyi { p: 0.5, seed: 3 }, 8),
    ];
    for (kind, m) in kinds {
        let t = Topology::build(kind, m).map_err(|e| e.to_string())?;
        let l = t.dense_laplacian();
        for i in 0..m {
            ensure!(l[i].iter().sum::<i64>() == 0, "{kind:?}: row {i} does not sum to zero");
            for j in 0..m {
                ensure!(l[i][j] == l[j][i], "{kind:?}: not symmetric at ({i},{j})");
            }
            ensure!(l[i][i] as usize == t.degree(i), "{kind:?}: diagonal {i} is not the degree");
            ensure!(t.degree(i) <= t.d_max(), "{kind:?}: degree above d_max");
        }
        let dense = nalgebra::DMatrix::from_fn(m, m, |i, j| l[i][j] as f64);
        let mut eig: Vec<f64> = dense.symmetric_eigen().eigenvalues.iter().copied().collect();
        eig.sort_by(f64::total_cmp);
        ensure!(eig[0].abs() < 1e-9, "{kind:?}: smallest eigenvalue {} is not zero", eig[0]);
        ensure!(eig[1] > 1e-9, "{kind:?}: graph not connected, lambda_2 = {}", eig[1]);
        // consensus lies in the kernel
        let ones = vec![vec![1.0]; m];
        ensure!(t.feasibility_residual(&ones).unwrap() == 0.0, "{kind:?}: consensus not feasible");
    }
    Ok(())
}

pub fn check_theta_sums() -> Check {
    for family in [WeightFamily::Uniform, WeightFamily::Strong] {
        for m in [1, 2, 5, 17, 32] {
            for n in [1, 2, 10, 333, 4096] {
                let th = family.theta_hat(n, m);
                let theta = asyncpd::schedules::theta_from_theta_hat(&th, m);
                let s1 = asyncpd::vecops::compensated_sum(th.iter().copied());
                let s2 = asyncpd::vecops::compensated_sum(theta.iter().copied());
                ensure!((s1 - 1.0).abs() < 1e-12, "{family:?} m={m} N={n}: sum theta_hat = {s1}");
                ensure!((s2 - 1.0).abs() < 1e-12, "{family:?} m={m} N={n}: sum theta = {s2}");
            }
        }
    }
    Ok(())
}

pub fn check_schedule_sweep(cases: usize) -> Check {
    let mut rng = aux_stream(2024);
    for case in 0..cases {
        let m = rng.random_range(2..=32);
        let n = rng.random_range(1..=4096);
        let kind = match rng.random_range(0..4) {
            0 => TopologyKind::Ring,
            1 => TopologyKind::Path,
            2 => TopologyKind::Complete,
            _ => TopologyKind::ErdosRenyi {
                p: rng.random_range(0.3..0.9),
                seed: rng.random(),
            },
        };
        let topo = Topology::build(kind, m).map_err(|e| format!("case {case}: {e}"))?;
        let d_max = topo.d_max();
        let consts = ProblemClassConstants {
            mu: rng.random_range(0.01..2.0),
            lip_l: rng.random_range(0.0..3.0),
            lip_m: rng.random_range(0.0..2.0),
            sigma: rng.random_range(0.0..2.0),
            growth_c: 1.0,
        };
        let scheds: Vec<OuterSchedule> = vec![
            adpd_schedule(m, d_max, n).map_err(|e| e.to_string())?,
            aasdcs_convex_schedule(m, d_max, n, &consts, ScheduleOptions::default()).map_err(|e| e.to_string())?,
            aasdcs_strong_schedule(m, d_max, n, &consts, ScheduleOptions::default()).map_err(|e| e.to_string())?,
        ];
        for s in scheds {
            let report = validate_schedule(&s, m, d_max, &consts);
            if !report.passed() {
                let failed: Vec<_> = report.failures().map(|c| (c.name, c.first_violation)).collect();
                return Err(format!(
                    "case {case}: {} with m={m} N={n} d_max={d_max} {consts:?} fails {failed:?}",
                    s.regime.name()
                ));
            }
        }
    }
    Ok(())
}

pub fn check_beta_lambda_constancy() -> Check {
    for smoothness in [0.5, 2.0, 13.0] {
        let inner = InnerSchedule {
            steps: 500,
            smoothness,
            mu: 0.0,
            eta: 1.0,
        };
        let a = inner.arrays();
        let r0 = a.beta[0] / a.cap_lambda[0];
        for t in 0..inner.steps {
            let r = a.beta[t] / a.cap_lambda[t];
            ensure!((r - r0).abs() <= 1e-9 * r0, "beta/Lambda drifts at t = {}: {r} vs {r0}", t + 1);
        }
    }
    Ok(())
}

fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}

/// Blocks of agents that were not activated stay bit-identical.
pub fn check_sparse_update_contract() -> Check {
    let (topo, p) = ring_quadratic(1.0);
    let m = topo.m();
    let adpd = adpd_schedule(m, topo.d_max(), 300).unwrap();
    let slide = aasdcs_convex_schedule(m, topo.d_max(), 300, &p.constants(), ScheduleOptions::default()).unwrap();
    let x0: Vec<Vec<f64>> = quadratic_centers(m, 2, 3.0, 9);
    let mut a = AdpdSolver::new(&topo, &p, &adpd, x0.clone()).unwrap();
    let mut b = AasdcsSolver::new(&topo, &p, &slide, x0, 5).unwrap();
    let mut rng = aux_stream(77);
    for k in 1..=300 {
        let act = draw_activation(m, &mut rng);
        for (name, solver) in [("adpd", &mut a as &mut dyn StepProbe), ("aasdcs", &mut b as &mut dyn StepProbe)] {
            let before = solver.snapshot();
            let rounds = solver.comm();
            solver.step_with_dyn(k, act).map_err(|e| e.to_string())?;
            let after = solver.snapshot();
            ensure!(solver.comm() == rounds + 2, "{name}: communication rounds not +2 at k = {k}");
            for i in 0..m {
                if i != act.dual_agent {
                    ensure!(bits(&before.y[i]) == bits(&after.y[i]), "{name}: y_{i} moved at k = {k}");
                }
                if i != act.primal_agent {
                    ensure!(bits(&before.x[i]) == bits(&after.x[i]), "{name}: x_{i} moved at k = {k}");
                    ensure!(
                        bits(&before.x_under[i]) == bits(&after.x_under[i]),
                        "{name}: x_under_{i} moved at k = {k}"
                    );
                }
            }
        }
    }
    Ok(())
}

pub struct Snapshot {
    pub x: Vec<Vec<f64>>,
    pub x_under: Vec<Vec<f64>>,
    pub y: Vec<Vec<f64>>,
}

/// Object-safe view over both solvers for the contract checks.
pub trait StepProbe {
    fn snapshot(&self) -> Snapshot;
    fn comm(&self) -> u64;
    fn step_with_dyn(&mut self, k: usize, act: Activation) -> asyncpd::Result<()>;
}

impl<S: Solver> StepProbe for S {
    fn snapshot(&self) -> Snapshot {
        Snapshot {
            x: self.state().x(),
            x_under: self.averaged_iterates().iter().map(|v| v.current().to_vec()).collect(),
            y: self.state().ys.clone(),
        }
    }

    fn comm(&self) -> u64 {
        self.state().counters.comm_rounds
    }

    fn step_with_dyn(&mut self, k: usize, act: Activation) -> asyncpd::Result<()> {
        self.step_with(k, act)
    }
}

/// Two runs of the harness with the same seeds write identical bytes.
pub fn check_determinism() -> Check {
    use asyncpd::harness::{run_experiment, RawConfig};
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut outputs = Vec::new();
    for rep in 0..2 {
        let out = dir.path().join(format!("rep{rep}"));
        let raw = RawConfig::parse(&format!(
            "topology = ring\nm = 4\nproblem = quadratic\nsigma = 1\nalgo = aasdcs\nN = 300\nseeds = 7,8\nlog_every = 20\nout = {}\n",
            out.display()
        ))
        .map_err(|e| e.to_string())?;
        run_experiment(&raw.build().map_err(|e| e.to_string())?).map_err(|e| e.to_string())?;
        let mut files = Vec::new();
        for name in ["aasdcs_7.csv", "aasdcs_8.csv", "summary.csv"] {
            files.push(std::fs::read(out.join(name)).map_err(|e| e.to_string())?);
        }
        outputs.push(files);
    }
    ensure!(outputs[0] == outputs[1], "repeat runs differ");
    ensure!(outputs[0][0] != outputs[0][1], "different seeds gave identical traces");
    Ok(())
}

/// Empirical mean and second moment of the oracle noise.
pub fn check_oracle_statistics() -> Check {
    let samples = 40_000;
    for (d, sigma) in [(1usize, 1.0), (4, 2.0), (10, 0.5)] {
        let f = QuadraticAgent::new(vec![0.5; d], 1.5, sigma).unwrap();
        let x: Vec<f64> = (0..d).map(|i| i as f64 * 0.3 - 1.0).collect();
        let mut exact = vec![0.0; d];
        f.subgradient(&x, &mut exact);
        let mut g = vec![0.0; d];
        let mut sum = vec![0.0; d];
        let mut second = 0.0;
        let mut rng = oracle_stream(3, d);
        for _ in 0..samples {
            f.sample_gradient(&x, &mut rng, &mut g);
            for i in 0..d {
                let e = g[i] - exact[i];
                sum[i] += e;
                second += e * e;
            }
        }
        let per_coord_sd = sigma / (d as f64).sqrt();
        for (i, s) in sum.iter().enumerate() {
            let m = s / samples as f64;
            ensure!(
                m.abs() < 5.0 * per_coord_sd / (samples as f64).sqrt(),
                "d={d}: coordinate {i} bias {m}"
            );
        }
        let var = second / samples as f64;
        ensure!((var / (sigma * sigma) - 1.0).abs() < 0.05, "d={d}: noise second moment {var} vs {}", sigma * sigma);
    }
    Ok(())
}

/// Oracle of a shard-sampled SVM agent averages to the full subgradient.
pub fn check_svm_oracle_unbiased() -> Check {
    use asyncpd::problems::{Regularizer, Sample, SparseVector, SvmAgent};
    let mut rng = aux_stream(5);
    let shard: Vec<Sample> = (0..30)
        .map(|i| Sample {
            label: if i % 3 == 0 { -1.0 } else { 1.0 },
            features: SparseVector::new((0..4).map(|j| (j, rng.random_range(-1.0..1.0))).collect()),
        })
        .collect();
    let agent = SvmAgent::new(shard, 4, Regularizer::L2 { weight: 0.1 }).unwrap();
    let x = [0.3, -0.2, 0.1, 0.05];
    let mut exact = [0.0; 4];
    agent.subgradient(&x, &mut exact);
    let n = 60_000;
    let mut g = [0.0; 4];
    let mut sum = [0.0; 4];
    let mut rng = oracle_stream(1, 1);
    for _ in 0..n {
        agent.sample_gradient(&x, &mut rng, &mut g);
        for i in 0..4 {
            sum[i] += g[i];
        }
    }
    let bound = 5.0 * agent.constants().sigma.max(1e-3) / (n as f64).sqrt();
    for i in 0..4 {
        let m = sum[i] / n as f64;
        ensure!((m - exact[i]).abs() < bound, "coordinate {i}: mean {m} vs {}", exact[i]);
    }
    Ok(())
}

/// Closed-form ball supremum against brute-force sampling of the sphere.
pub fn check_perturbed_gap_brute_force() -> Check {
    let mut rng = aux_stream(99);
    for case in 0..10 {
        let (m, d) = if case % 2 == 0 { (3, 1) } else { (2, 1) };
        let topo = Topology::build(TopologyKind::Path, m).unwrap();
        let centers: Vec<Vec<f64>> = (0..m).map(|_| vec![rng.random_range(-2.0..2.0)]).collect();
        let p = make_quadratic_problem(&centers, rng.random_range(0.5..2.0), 0.0).unwrap();
        let x_star = vec![vec![centers.iter().map(|c| c[0]).sum::<f64>() / m as f64]; m];
        let rand_stack = |rng: &mut StreamRng| -> Vec<Vec<f64>> {
            (0..m).map(|_| (0..d).map(|_| rng.random_range(-2.0..2.0)).collect()).collect()
        };
        let z = PrimalDual {
            xs: rand_stack(&mut rng),
            ys: rand_stack(&mut rng),
        };
        let v = rand_stack(&mut rng);
        let radius = rng.random_range(0.1..3.0);
        let closed = perturbed_gap(&p, &topo, &v, &z, &x_star, radius).map_err(|e| e.to_string())?;

        let mut best = f64::NEG_INFINITY;
        for _ in 0..100_000 {
            let mut ybar: Vec<Vec<f64>> = (0..m)
                .map(|_| (0..d).map(|_| StandardNormal.sample(&mut rng)).collect())
                .collect();
            let norm = ybar.iter().flatten().map(|a: &f64| a * a).sum::<f64>().sqrt();
            for b in ybar.iter_mut().flatten() {
                *b *= radius / norm;
            }
            let zbar = PrimalDual {
                xs: x_star.clone(),
                ys: ybar.clone(),
            };
            let q = gap_function_q(&p, &topo, &z, &zbar).unwrap();
            let lin: f64 = v.iter().flatten().zip(ybar.iter().flatten()).map(|(a, b)| a * b).sum();
            best = best.max(q - lin);
        }
        let scale = 1.0 + closed.abs();
        ensure!(best <= closed + 1e-12 * scale, "case {case}: brute {best} above closed form {closed}");
        ensure!(closed - best < 1e-3 * scale, "case {case}: brute {best} too far below closed form {closed}");
    }
    Ok(())
}

/// Saddle point of an `m = 2` quadratic on the single-edge graph, from KKT:
/// `x* = mean(c)`, and `q (x* - c_1) + (L^T y*)_1 = 0` with `y* = (s, 0)`.
pub fn check_q_saddle_inequalities() -> Check {
    let topo = Topology::build(TopologyKind::Complete, 2).unwrap();
    let mut rng = aux_stream(4);
    for case in 0..10 {
        let q = rng.random_range(0.5..2.0);
        let (c1, c2) = (rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0));
        let p = make_quadratic_problem(&[vec![c1], vec![c2]], q, 0.0).unwrap();
        let xs = (c1 + c2) / 2.0;
        // L = [[1,-1],[-1,1]]; grad_1 + y_1 - y_2 = 0 with y = (s, 0)
        let s = -q * (xs - c1);
        let star = PrimalDual {
            xs: vec![vec![xs]; 2],
            ys: vec![vec![s], vec![0.0]],
        };
        for _ in 0..20 {
            let z = PrimalDual {
                xs: vec![vec![rng.random_range(-3.0..3.0)], vec![rng.random_range(-3.0..3.0)]],
                ys: vec![vec![rng.random_range(-3.0..3.0)], vec![rng.random_range(-3.0..3.0)]],
            };
            let a = gap_function_q(&p, &topo, &star, &z).unwrap();
            let b = gap_function_q(&p, &topo, &z, &star).unwrap();
            ensure!(a <= 1e-12, "case {case}: Q(z*, z) = {a} > 0");
            ensure!(b >= -1e-12, "case {case}: Q(z, z*) = {b} < 0");
        }
    }
    Ok(())
}

/// Lazy neighbourhood extrapolation agrees with a dense implementation that
/// updates every agent's extrapolated point at every iteration.
pub fn check_lazy_extrapolation_matches_dense() -> Check {
    let topo = Topology::build(TopologyKind::ErdosRenyi { p: 0.5, seed: 2 }, 6).unwrap();
    let m = topo.m();
    let centers = quadratic_centers(m, 3, 2.0, 1);
    let p = make_quadratic_problem(&centers, 1.3, 0.7).unwrap();
    let n = 200;
    let seed = 31;
    let x0 = quadratic_centers(m, 3, 1.0, 8);

    // exact prox method
    let sched = adpd_schedule(m, topo.d_max(), n).unwrap();
    let mut lazy = AdpdSolver::new(&topo, &p, &sched, x0.clone()).unwrap();
    let mut dense = DenseReference::new(&topo, x0.clone());
    let mut rng = aux_stream(seed);
    for k in 1..=n {
        let act = draw_activation(m, &mut rng);
        lazy.step_with(k, act).map_err(|e| e.to_string())?;
        dense.step(k, act, &sched, &p, None);
        compare_stacks("adpd x", k, &lazy.state().x(), &dense.x)?;
        compare_stacks("adpd y", k, &lazy.state().ys, &dense.y)?;
    }

    // sliding method
    let sched = aasdcs_convex_schedule(m, topo.d_max(), n, &p.constants(), ScheduleOptions::default()).unwrap();
    let mut lazy = AasdcsSolver::new(&topo, &p, &sched, x0.clone(), seed).unwrap();
    let mut dense = DenseReference::new(&topo, x0);
    let mut rng = aux_stream(seed);
    for k in 1..=n {
        let act = draw_activation(m, &mut rng);
        lazy.step_with(k, act).map_err(|e| e.to_string())?;
        dense.step(k, act, &sched, &p, Some(seed));
        compare_stacks("aasdcs x", k, &lazy.state().x(), &dense.x)?;
        compare_stacks("aasdcs y", k, &lazy.state().ys, &dense.y)?;
        let xu: Vec<Vec<f64>> = lazy.x_under().iter().map(|v| v.current().to_vec()).collect();
        compare_stacks("aasdcs x_under", k, &xu, &dense.x_under)?;
    }
    Ok(())
}

fn compare_stacks(what: &str, k: usize, a: &[Vec<f64>], b: &[Vec<f64>]) -> Check {
    for (i, (u, v)) in a.iter().zip(b).enumerate() {
        for (s, t) in u.iter().zip(v) {
            ensure!((s - t).abs() <= 1e-12 * (1.0 + t.abs()), "{what}: agent {i} differs at k = {k}: {s} vs {t}");
        }
    }
    Ok(())
}

/// Full-state reference: keeps `x^{k-1}`, `x^{k-2}` for every agent and
/// multiplies by the dense Laplacian.
struct DenseReference {
    lap: Vec<Vec<i64>>,
    x: Vec<Vec<f64>>,
    x_prev: Vec<Vec<f64>>,
    x_under: Vec<Vec<f64>>,
    x_under_prev: Vec<Vec<f64>>,
    y: Vec<Vec<f64>>,
}

impl DenseReference {
    fn new(topo: &Topology, x0: Vec<Vec<f64>>) -> Self {
        let d = x0[0].len();
        DenseReference {
            lap: topo.dense_laplacian(),
            x_prev: x0.clone(),
            x_under: x0.clone(),
            x_under_prev: x0.clone(),
            y: vec![vec![0.0; d]; x0.len()],
            x: x0,
        }
    }

    fn lap_row(&self, i: usize, stack: &[Vec<f64>]) -> Vec<f64> {
        let d = stack[0].len();
        let mut out = vec![0.0; d];
        for (j, s) in stack.iter().enumerate() {
            let c = self.lap[i][j];
            if c != 0 {
                for t in 0..d {
                    out[t] += c as f64 * s[t];
                }
            }
        }
        out
    }

    fn step(&mut self, k: usize, act: Activation, sched: &OuterSchedule, p: &ProblemSet, sliding_seed: Option<u64>) {
        let m = self.x.len();
        let mf = m as f64;
        let alpha = sched.alpha(k);
        let xt: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                (0..self.x[j].len())
                    .map(|t| match sliding_seed {
                        None => alpha * (self.x[j][t] - self.x_prev[j][t]) + self.x[j][t],
                        Some(_) => {
                            alpha * (mf * self.x_under[j][t] - (mf - 1.0) * self.x_under_prev[j][t] - self.x_prev[j][t])
                                + self.x[j][t]
                        }
                    })
                    .collect()
            })
            .collect();
        let v = self.lap_row(act.dual_agent, &xt);
        let y_old = self.y.clone();
        for (yt, vt) in self.y[act.dual_agent].iter_mut().zip(&v) {
            *yt += vt / sched.tau(k);
        }
        let yt: Vec<Vec<f64>> = (0..m)
            .map(|j| {
                (0..self.y[j].len())
                    .map(|t| mf * (self.y[j][t] - y_old[j][t]) + y_old[j][t])
                    .collect()
            })
            .collect();
        let w = self.lap_row(act.primal_agent, &yt);
        let j = act.primal_agent;
        let new_prev = self.x.clone();
        let new_under_prev = self.x_under.clone();
        match sliding_seed {
            None => {
                self.x[j] = p.agent(j).exact_prox(&w, &self.x[j], sched.eta(k)).unwrap();
            }
            Some(seed) => {
                let inner = InnerSchedule {
                    steps: sched.inner(k).unwrap(),
                    smoothness: sched.inner_smoothness,
                    mu: sched.inner_mu,
                    eta: sched.eta(k),
                };
                let out = acs_solve(
                    p.agent(j),
                    &asyncpd::problems::Euclidean,
                    &inner,
                    &w,
                    &self.x[j],
                    &mut oracle_stream(seed, k),
                )
                .unwrap();
                self.x[j] = out.x;
                self.x_under[j] = out.x_under;
            }
        }
        self.x_prev = new_prev;
        self.x_under_prev = new_under_prev;
    }
}

pub fn spread_objective(d: usize) -> Arc<SpreadQuadratic> {
    Arc::new(SpreadQuadratic::new(d))
}
