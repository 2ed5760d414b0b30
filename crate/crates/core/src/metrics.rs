//! Centralized references, optimality and feasibility measures, gap
//! functions, rate fitting and the per-run trace format.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::graph::Topology;
use crate::problems::ProblemSet;
use crate::vecops;

pub const TRACE_HEADER: &str = "k,comm_rounds,grad_evals,objective,feasibility,wall_seconds,seed";

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReferenceMethod {
    ClosedForm,
    LongRunSubgradient,
}

impl ReferenceMethod {
    pub fn name(&self) -> &'static str {
        match self {
            ReferenceMethod::ClosedForm => "closed_form",
            ReferenceMethod::LongRunSubgradient => "long_run_subgradient",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ReferenceSolution {
    pub x_star: Vec<f64>,
    pub f_star: f64,
    pub method: ReferenceMethod,
    /// Centralized gradient norm (closed form) or relative stall of the
    /// averaged objective between budget doublings (subgradient).
    pub certificate: f64,
}

impl ReferenceSolution {
    /// The consensus point copied to every agent.
    pub fn stacked(&self, m: usize) -> Vec<Vec<f64>> {
        vec![self.x_star.clone(); m]
    }

    pub fn to_text(&self) -> String {
        let xs: Vec<String> = self.x_star.iter().map(f64::to_string).collect();
        format!(
            "method={}\nf_star={}\ncertificate={}\nx_star={}\n",
            self.method.name(),
            self.f_star,
            self.certificate,
            xs.join(",")
        )
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut method = None;
        let mut f_star = None;
        let mut certificate = None;
        let mut x_star = None;
        let bad = |msg: String| Error::Parse {
            path: "<reference>".into(),
            line: 0,
            msg,
        };
        for line in text.lines().filter(|l| !l.trim().is_empty()) {
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| bad(format!("expected key=value, got {line:?}")))?;
            let num = |v: &str| v.trim().parse::<f64>().map_err(|_| bad(format!("bad number {v:?}")));
            match k.trim() {
                "method" => {
                    method = Some(match v.trim() {
                        "closed_form" => ReferenceMethod::ClosedForm,
                        "long_run_subgradient" => ReferenceMethod::LongRunSubgradient,
                        other => return Err(bad(format!("unknown method {other:?}"))),
                    })
                }
                "f_star" => f_star = Some(num(v)?),
                "certificate" => certificate = Some(num(v)?),
                "x_star" => x_star = Some(v.split(',').map(num).collect::<Result<Vec<_>>>()?),
                other => return Err(bad(format!("unknown key {other:?}"))),
            }
        }
        match (method, f_star, certificate, x_star) {
            (Some(method), Some(f_star), Some(certificate), Some(x_star)) => Ok(ReferenceSolution {
                x_star,
                f_star,
                method,
                certificate,
            }),
            _ => Err(bad("incomplete reference file".into())),
        }
    }
}

/// Solves `min_x sum_i f_i(x)` centrally.
///
/// `ClosedForm` needs quadratic agents and returns the `q`-weighted mean of
/// the centres. `LongRunSubgradient` runs full-batch subgradient descent from
/// the origin with steps `s / sqrt(t)` and Polyak averaging; every time the
/// iteration count doubles it compares the averaged objective against the
/// previous doubling, and stops once the relative change is `<= tol`.
pub fn centralized_reference(
    problems: &ProblemSet,
    method: ReferenceMethod,
    budget: usize,
    tol: f64,
) -> Result<ReferenceSolution> {
    match method {
        ReferenceMethod::ClosedForm => closed_form_reference(problems),
        ReferenceMethod::LongRunSubgradient => subgradient_reference(problems, budget, tol),
    }
}

fn closed_form_reference(problems: &ProblemSet) -> Result<ReferenceSolution> {
    let d = problems.dim();
    let mut num = vec![0.0; d];
    let mut den = 0.0;
    for a in problems.agents() {
        let (c, q) = a.as_quadratic().ok_or_else(|| {
            Error::UnsupportedProblem("closed-form reference needs quadratic agents".into())
        })?;
        vecops::axpy(q, c, &mut num);
        den += q;
    }
    vecops::scale(1.0 / den, &mut num);
    let mut g = vec![0.0; d];
    problems.consensus_subgradient(&num, &mut g);
    Ok(ReferenceSolution {
        f_star: problems.consensus_value(&num),
        certificate: vecops::norm(&g),
        x_star: num,
        method: ReferenceMethod::ClosedForm,
    })
}

const FIRST_CHECK: usize = 1024;

fn subgradient_reference(problems: &ProblemSet, budget: usize, tol: f64) -> Result<ReferenceSolution> {
    let d = problems.dim();
    let mut x = vec![0.0; d];
    let mut g = vec![0.0; d];
    problems.consensus_subgradient(&x, &mut g);
    // Step scale: distance one per unit of the initial subgradient.
    let step = 1.0 / vecops::norm(&g).max(1.0);

    let mut avg = vec![0.0; d];
    let mut best_x = x.clone();
    let mut best_f = problems.consensus_value(&x);
    let mut prev_avg_f = f64::INFINITY;
    let mut next_check = FIRST_CHECK;
    let mut certificate = f64::INFINITY;
    let mut t = 0usize;
    while t < budget {
        t += 1;
        problems.consensus_subgradient(&x, &mut g);
        vecops::axpy(-step / (t as f64).sqrt(), &g, &mut x);
        // running mean of the iterates
        for (a, xi) in avg.iter_mut().zip(&x) {
            *a += (xi - *a) / t as f64;
        }
        if t == next_check || t == budget {
            let f = problems.consensus_value(&x);
            if f < best_f {
                best_f = f;
                best_x.copy_from_slice(&x);
            }
            let avg_f = problems.consensus_value(&avg);
            if avg_f < best_f {
                best_f = avg_f;
                best_x.copy_from_slice(&avg);
            }
            if prev_avg_f.is_finite() {
                certificate = (prev_avg_f - avg_f).abs() / avg_f.abs().max(1.0);
                if certificate <= tol {
                    break;
                }
            }
            prev_avg_f = avg_f;
            next_check *= 2;
        }
    }
    if certificate > tol {
        return Err(Error::ReferenceNotConverged {
            certificate,
            tol,
            iterations: t,
        });
    }
    Ok(ReferenceSolution {
        x_star: best_x,
        f_star: best_f,
        method: ReferenceMethod::LongRunSubgradient,
        certificate,
    })
}

/// `sum_i f_i(x_i) - F*`, signed: infeasible points can sit below `F*`.
pub fn primal_gap(problems: &ProblemSet, xs: &[Vec<f64>], reference: &ReferenceSolution) -> Result<f64> {
    Ok(problems.stacked_value(xs)? - reference.f_star)
}

/// A primal-dual pair of stacked agent vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct PrimalDual {
    pub xs: Vec<Vec<f64>>,
    pub ys: Vec<Vec<f64>>,
}

/// `Q(z; zbar) = F(x) + <Lx, ybar> - F(xbar) - <L xbar, y>`.
pub fn gap_function_q(problems: &ProblemSet, topo: &Topology, z: &PrimalDual, zbar: &PrimalDual) -> Result<f64> {
    let lx = topo.apply_laplacian(&z.xs)?;
    let lxbar = topo.apply_laplacian(&zbar.xs)?;
    check_stack(&z.ys, &lx)?;
    check_stack(&zbar.ys, &lxbar)?;
    Ok(problems.stacked_value(&z.xs)? + vecops::stacked_dot(&lx, &zbar.ys)
        - problems.stacked_value(&zbar.xs)?
        - vecops::stacked_dot(&lxbar, &z.ys))
}

/// `sup_{|ybar| <= R} Q(z; x*, ybar) - <v, ybar>`, in closed form
/// `F(x) - F(x*) - <L x*, y> + R |Lx - v|`.
pub fn perturbed_gap(
    problems: &ProblemSet,
    topo: &Topology,
    v: &[Vec<f64>],
    z: &PrimalDual,
    x_star: &[Vec<f64>],
    radius: f64,
) -> Result<f64> {
    if !(radius >= 0.0) {
        return Err(Error::invalid(format!("ball radius must be >= 0, got {radius}")));
    }
    let lx = topo.apply_laplacian(&z.xs)?;
    let lx_star = topo.apply_laplacian(x_star)?;
    check_stack(v, &lx)?;
    check_stack(&z.ys, &lx)?;
    let resid: f64 = lx
        .iter()
        .zip(v)
        .map(|(a, b)| vecops::dist_sq(a, b))
        .sum::<f64>()
        .sqrt();
    Ok(problems.stacked_value(&z.xs)? - problems.stacked_value(x_star)? - vecops::stacked_dot(&lx_star, &z.ys)
        + radius * resid)
}

fn check_stack(a: &[Vec<f64>], like: &[Vec<f64>]) -> Result<()> {
    Error::check_dim(like.len(), a.len())?;
    for (x, y) in a.iter().zip(like) {
        Error::check_dim(y.len(), x.len())?;
    }
    Ok(())
}

/// Least-squares slope of `log(value)` against `log(n)`.
pub fn rate_slope(points: &[(f64, f64)]) -> Result<f64> {
    if points.len() < 2 {
        return Err(Error::invalid("rate fit needs at least two points"));
    }
    if let Some(&(n, v)) = points.iter().find(|(n, v)| !(*n > 0.0 && *v > 0.0)) {
        return Err(Error::invalid(format!("rate fit needs positive data, got ({n}, {v})")));
    }
    let logs: Vec<(f64, f64)> = points.iter().map(|(n, v)| (n.ln(), v.ln())).collect();
    let k = logs.len() as f64;
    let mx = logs.iter().map(|p| p.0).sum::<f64>() / k;
    let my = logs.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = logs.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::invalid("rate fit needs at least two distinct N"));
    }
    let sxy: f64 = logs.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    Ok(sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TraceRow {
    pub k: usize,
    pub comm_rounds: u64,
    pub grad_evals: u64,
    /// `F(xbar^k)` of the ergodic average reported at `k`.
    pub objective: f64,
    /// `|L xbar^k|`
    pub feasibility: f64,
    pub wall_seconds: f64,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct RunTrace {
    pub seed: u64,
    pub rows: Vec<TraceRow>,
}

impl RunTrace {
    pub fn last(&self) -> Option<&TraceRow> {
        self.rows.last()
    }

    pub fn at(&self, k: usize) -> Option<&TraceRow> {
        self.rows.iter().find(|r| r.k == k)
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(64 * (self.rows.len() + 1));
        s.push_str(TRACE_HEADER);
        s.push('\n');
        for r in &self.rows {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{}",
                r.k, r.comm_rounds, r.grad_evals, r.objective, r.feasibility, r.wall_seconds, self.seed
            );
        }
        s
    }

    pub fn from_csv(text: &str) -> Result<Self> {
        let bad = |line: usize, msg: String| Error::Parse {
            path: "<trace>".into(),
            line,
            msg,
        };
        let mut lines = text.lines().enumerate();
        match lines.next() {
            Some((_, h)) if h == TRACE_HEADER => {}
            other => return Err(bad(1, format!("unexpected header {:?}", other.map(|o| o.1)))),
        }
        let mut trace = RunTrace::default();
        for (n, line) in lines {
            if line.is_empty() {
                continue;
            }
            let f: Vec<&str> = line.split(',').collect();
            if f.len() != 7 {
                return Err(bad(n + 1, format!("expected 7 fields, got {}", f.len())));
            }
            let p = |i: usize| f[i].parse::<f64>().map_err(|_| bad(n + 1, format!("bad number {:?}", f[i])));
            let u = |i: usize| f[i].parse::<u64>().map_err(|_| bad(n + 1, format!("bad integer {:?}", f[i])));
            trace.rows.push(TraceRow {
                k: u(0)? as usize,
                comm_rounds: u(1)?,
                grad_evals: u(2)?,
                objective: p(3)?,
                feasibility: p(4)?,
                wall_seconds: p(5)?,
            });
            trace.seed = u(6)?;
        }
        Ok(trace)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        Self::from_csv(&std::fs::read_to_string(path)?)
    }

    /// `comm_rounds = 2k`, nondecreasing gradient counts, finite columns.
    pub fn check_invariants(&self) -> Result<()> {
        let mut last = 0;
        for r in &self.rows {
            if r.comm_rounds != 2 * r.k as u64 {
                return Err(Error::invalid(format!("row k = {} has {} communication rounds", r.k, r.comm_rounds)));
            }
            if r.grad_evals < last {
                return Err(Error::invalid(format!("gradient count decreases at k = {}", r.k)));
            }
            last = r.grad_evals;
            if !(r.objective.is_finite() && r.feasibility.is_finite() && r.wall_seconds.is_finite()) {
                return Err(Error::invalid(format!("non-finite value at k = {}", r.k)));
            }
        }
        Ok(())
    }
}
