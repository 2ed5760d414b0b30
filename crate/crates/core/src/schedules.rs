//! Outer and inner parameter sequences, ergodic weights and the
//! inequalities those sequences must satisfy.
//!
//! Outer arrays are indexed by iteration `k = 1..=N`; the weight arrays
//! `theta_hat` and `theta` are indexed `k = 0..=N`.

use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::problems::ProblemClassConstants;
use crate::vecops;

const REL_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Regime {
    Adpd,
    AasdcsConvex,
    AasdcsStronglyConvex,
}

impl Regime {
    pub fn name(&self) -> &'static str {
        match self {
            Regime::Adpd => "adpd",
            Regime::AasdcsConvex => "aasdcs_convex",
            Regime::AasdcsStronglyConvex => "aasdcs_strongly_convex",
        }
    }
}

/// Unnormalised weight families behind `theta_hat`.
///
/// `theta_hat_k = c_k / Z(N)` with `Z(N) = sum_{k<=N} c_k`, where `c_k` does
/// not depend on `N`. That is what lets a run report the ergodic average of
/// any prefix without knowing where it will stop.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WeightFamily {
    /// `c_0 = m`, `c_k = 1`.
    Uniform,
    /// `c_0 = 6m^2`, `c_k = 2(k + 3m)`.
    Strong,
}

impl WeightFamily {
    pub fn unnormalized(&self, k: usize, m: usize) -> f64 {
        let m = m as f64;
        match (self, k) {
            (WeightFamily::Uniform, 0) => m,
            (WeightFamily::Uniform, _) => 1.0,
            (WeightFamily::Strong, 0) => 6.0 * m * m,
            (WeightFamily::Strong, k) => 2.0 * (k as f64 + 3.0 * m),
        }
    }

    /// `Z(N)` in closed form.
    pub fn normalizer(&self, n: usize, m: usize) -> f64 {
        let (nf, mf) = (n as f64, m as f64);
        match self {
            WeightFamily::Uniform => nf + mf,
            WeightFamily::Strong => 6.0 * mf * mf + nf * (nf + 6.0 * mf + 1.0),
        }
    }

    pub fn theta_hat(&self, n: usize, m: usize) -> Vec<f64> {
        let z = self.normalizer(n, m);
        (0..=n).map(|k| self.unnormalized(k, m) / z).collect()
    }

    /// Unnormalised interior weight of iterate `k` in any prefix average
    /// that extends past `k`.
    pub fn interior_weight(&self, k: usize, m: usize) -> f64 {
        let mf = m as f64;
        let next = (mf - 1.0) * self.unnormalized(k + 1, m);
        if k == 0 {
            self.unnormalized(0, m) - next
        } else {
            mf * self.unnormalized(k, m) - next
        }
    }

    /// Unnormalised weight of the last iterate of a length-`n` prefix.
    pub fn terminal_weight(&self, n: usize, m: usize) -> f64 {
        m as f64 * self.unnormalized(n, m)
    }
}

/// `theta` from `theta_hat`:
/// `theta_0 = th_0 - (m-1) th_1`, `theta_k = m th_k - (m-1) th_{k+1}`,
/// `theta_N = m th_N`.
pub fn theta_from_theta_hat(theta_hat: &[f64], m: usize) -> Vec<f64> {
    let n = theta_hat.len() - 1;
    let mf = m as f64;
    (0..=n)
        .map(|k| match k {
            _ if k == n && n > 0 => mf * theta_hat[n],
            0 if n == 0 => theta_hat[0],
            0 => theta_hat[0] - (mf - 1.0) * theta_hat[1],
            _ => mf * theta_hat[k] - (mf - 1.0) * theta_hat[k + 1],
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct OuterSchedule {
    pub regime: Regime,
    pub n: usize,
    pub m: usize,
    /// `alpha[k-1]` is `alpha_k`.
    pub alpha: Vec<f64>,
    pub tau: Vec<f64>,
    pub eta: Vec<f64>,
    /// Inner budgets `T_k`; `None` for the exact-prox method.
    pub inner_steps: Option<Vec<usize>>,
    /// The `D` constant used for `T_k`.
    pub d_const: Option<f64>,
    pub family: WeightFamily,
    pub theta_hat: Vec<f64>,
    pub theta: Vec<f64>,
    /// Strong-convexity modulus handed to the inner loop.
    pub inner_mu: f64,
    /// `C + L` of the inner step sizes.
    pub inner_smoothness: f64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ScheduleOptions {
    /// Override for `D`.
    pub d_const: Option<f64>,
    /// Constant inner budget replacing the `T_k` formula.
    pub inner_steps: Option<usize>,
}

impl OuterSchedule {
    pub fn alpha(&self, k: usize) -> f64 {
        self.alpha[k - 1]
    }

    pub fn tau(&self, k: usize) -> f64 {
        self.tau[k - 1]
    }

    pub fn eta(&self, k: usize) -> f64 {
        self.eta[k - 1]
    }

    pub fn inner(&self, k: usize) -> Option<usize> {
        self.inner_steps.as_ref().map(|t| t[k - 1])
    }

    /// `sum_k T_k`, the gradient evaluations a full run performs.
    pub fn total_inner_steps(&self) -> usize {
        self.inner_steps.as_ref().map_or(0, |t| t.iter().sum())
    }

    /// CSV audit dump: `k,alpha,tau,eta,T,theta_hat,theta`.
    pub fn to_csv(&self) -> String {
        let mut s = String::from("k,alpha,tau,eta,T,theta_hat,theta\n");
        let _ = writeln!(s, "0,,,,,{},{}", self.theta_hat[0], self.theta[0]);
        for k in 1..=self.n {
            let t = self.inner(k).map(|t| t.to_string()).unwrap_or_default();
            let _ = writeln!(
                s,
                "{k},{},{},{},{t},{},{}",
                self.alpha(k),
                self.tau(k),
                self.eta(k),
                self.theta_hat[k],
                self.theta[k]
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv())?;
        Ok(())
    }

    fn weights(family: WeightFamily, n: usize, m: usize) -> (Vec<f64>, Vec<f64>) {
        let theta_hat = family.theta_hat(n, m);
        let theta = theta_from_theta_hat(&theta_hat, m);
        (theta_hat, theta)
    }
}

fn check_budget(n: usize) -> Result<()> {
    if n < 1 {
        return Err(Error::invalid("iteration budget N must be >= 1"));
    }
    Ok(())
}

/// Exact-prox parameters: `alpha = m`, `eta = tau = 2 m d_max`, uniform weights.
pub fn adpd_schedule(m: usize, d_max: usize, n: usize) -> Result<OuterSchedule> {
    check_budget(n)?;
    let mf = m as f64;
    let c = 2.0 * mf * d_max as f64;
    let (theta_hat, theta) = OuterSchedule::weights(WeightFamily::Uniform, n, m);
    Ok(OuterSchedule {
        regime: Regime::Adpd,
        n,
        m,
        alpha: vec![mf; n],
        tau: vec![c; n],
        eta: vec![c; n],
        inner_steps: None,
        d_const: None,
        family: WeightFamily::Uniform,
        theta_hat,
        theta,
        inner_mu: 0.0,
        inner_smoothness: 0.0,
    })
}

fn ceil_count(x: f64) -> usize {
    if x.is_finite() && x > 0.0 {
        x.ceil() as usize
    } else {
        0
    }
}

/// Convex sliding parameters: `alpha = 1`, `eta = 4 m d_max`, `tau = 2 d_max`
/// and a constant inner budget
/// `T = max{ceil((M^2+sigma^2) N / (d_max D)), ceil(sqrt((C+L)/(m d_max)))}`,
/// clamped to at least one. `D` defaults to `m^2 d_max`.
pub fn aasdcs_convex_schedule(
    m: usize,
    d_max: usize,
    n: usize,
    consts: &ProblemClassConstants,
    opts: ScheduleOptions,
) -> Result<OuterSchedule> {
    check_budget(n)?;
    if d_max == 0 {
        return Err(Error::invalid("sliding schedule needs d_max >= 1"));
    }
    let (mf, df) = (m as f64, d_max as f64);
    let d_const = opts.d_const.unwrap_or(mf * mf * df);
    if !(d_const > 0.0) {
        return Err(Error::invalid(format!("D must be positive, got {d_const}")));
    }
    let smooth = consts.growth_c + consts.lip_l;
    let t = opts.inner_steps.unwrap_or_else(|| {
        let noise = ceil_count(consts.noise_budget() * n as f64 / (df * d_const));
        let smooth_branch = ceil_count((smooth / (mf * df)).sqrt());
        noise.max(smooth_branch).max(1)
    });
    if t == 0 {
        return Err(Error::invalid("inner budget T must be >= 1"));
    }
    let (theta_hat, theta) = OuterSchedule::weights(WeightFamily::Uniform, n, m);
    Ok(OuterSchedule {
        regime: Regime::AasdcsConvex,
        n,
        m,
        alpha: vec![1.0; n],
        tau: vec![2.0 * df; n],
        eta: vec![4.0 * mf * df; n],
        inner_steps: Some(vec![t; n]),
        d_const: Some(d_const),
        family: WeightFamily::Uniform,
        theta_hat,
        theta,
        inner_mu: 0.0,
        inner_smoothness: smooth,
    })
}

/// Strongly convex sliding parameters:
///
/// ```text
/// alpha_k = (k+3m-1)/(k+3m)
/// tau_k   = 32 m d_max^2 / ((k+3m) mu)
/// eta_k   = (k+3m-1) mu / 2 - (C+L) / (T_k (T_k+1))
/// T_k     = max{ceil(64 m (M^2+sigma^2) N / (D mu^2)), ceil(sqrt(4(C+L)/((k+3m-3) mu)))}
/// ```
///
/// `D` defaults to `m^3`. Formula budgets are raised until
/// `eta_k >= (k+3m+1) mu / 4`; an explicit budget override is kept as is and
/// left to [`validate_schedule`].
pub fn aasdcs_strong_schedule(
    m: usize,
    d_max: usize,
    n: usize,
    consts: &ProblemClassConstants,
    opts: ScheduleOptions,
) -> Result<OuterSchedule> {
    check_budget(n)?;
    let mu = consts.mu;
    if !(mu > 0.0) {
        return Err(Error::invalid(format!(
            "strongly convex schedule needs mu > 0, got {mu}"
        )));
    }
    let (mf, df) = (m as f64, d_max as f64);
    let d_const = opts.d_const.unwrap_or(mf * mf * mf);
    if !(d_const > 0.0) {
        return Err(Error::invalid(format!("D must be positive, got {d_const}")));
    }
    let smooth = consts.growth_c + consts.lip_l;
    let noise_branch = ceil_count(64.0 * mf * consts.noise_budget() * n as f64 / (d_const * mu * mu));

    let mut alpha = Vec::with_capacity(n);
    let mut tau = Vec::with_capacity(n);
    let mut eta = Vec::with_capacity(n);
    let mut steps = Vec::with_capacity(n);
    for k in 1..=n {
        let s = k as f64 + 3.0 * mf;
        let eta_of = |t: usize| (s - 1.0) * mu / 2.0 - smooth / (t as f64 * (t as f64 + 1.0));
        let t = match opts.inner_steps {
            Some(0) => return Err(Error::invalid("inner budget T must be >= 1")),
            Some(t) => t,
            None => {
                let smooth_branch = ceil_count((4.0 * smooth / ((s - 3.0) * mu)).sqrt());
                let mut t = noise_branch.max(smooth_branch).max(1);
                let floor = (s + 1.0) * mu / 4.0;
                while eta_of(t) < floor {
                    t += 1;
                }
                t
            }
        };
        let e = eta_of(t);
        if !(e > 0.0) {
            return Err(Error::ScheduleInfeasible(format!(
                "eta_{k} = {e} is not positive with T_{k} = {t}"
            )));
        }
        alpha.push((s - 1.0) / s);
        tau.push(32.0 * mf * df * df / (s * mu));
        eta.push(e);
        steps.push(t);
    }
    let (theta_hat, theta) = OuterSchedule::weights(WeightFamily::Strong, n, m);
    Ok(OuterSchedule {
        regime: Regime::AasdcsStronglyConvex,
        n,
        m,
        alpha,
        tau,
        eta,
        inner_steps: Some(steps),
        d_const: Some(d_const),
        family: WeightFamily::Strong,
        theta_hat,
        theta,
        inner_mu: mu,
        inner_smoothness: smooth,
    })
}

/// Step-size rules of the inner accelerated loop:
/// `lambda_t = 2/(t+1)`, `beta_t = 4(C+L)/(t(t+1))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct InnerSchedule {
    pub steps: usize,
    /// `C + L`
    pub smoothness: f64,
    pub mu: f64,
    pub eta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct InnerArrays {
    pub lambda: Vec<f64>,
    pub beta: Vec<f64>,
    /// `Lambda_1 = 1`, `Lambda_t = (1 - lambda_t) Lambda_{t-1}`.
    pub cap_lambda: Vec<f64>,
}

impl InnerSchedule {
    pub fn lambda(t: usize) -> f64 {
        2.0 / (t as f64 + 1.0)
    }

    pub fn beta(&self, t: usize) -> f64 {
        let t = t as f64;
        4.0 * self.smoothness / (t * (t + 1.0))
    }

    pub fn arrays(&self) -> InnerArrays {
        let lambda: Vec<f64> = (1..=self.steps).map(Self::lambda).collect();
        let beta = (1..=self.steps).map(|t| self.beta(t)).collect();
        let mut cap_lambda = Vec::with_capacity(self.steps);
        for (i, l) in lambda.iter().enumerate() {
            let prev = if i == 0 { 1.0 } else { cap_lambda[i - 1] * (1.0 - l) };
            cap_lambda.push(prev);
        }
        InnerArrays {
            lambda,
            beta,
            cap_lambda,
        }
    }
}

pub fn inner_schedule(steps: usize, consts: &ProblemClassConstants, mu: f64, eta: f64) -> Result<InnerSchedule> {
    if steps < 1 {
        return Err(Error::invalid("inner budget T must be >= 1"));
    }
    Ok(InnerSchedule {
        steps,
        smoothness: consts.growth_c + consts.lip_l,
        mu,
        eta,
    })
}

/// Outcome of one named condition.
#[derive(Clone, Debug, PartialEq)]
pub struct ConditionCheck {
    pub name: &'static str,
    pub passed: bool,
    /// First iteration index (or inner step) where the condition fails.
    pub first_violation: Option<usize>,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ValidationReport {
    pub checks: Vec<ConditionCheck>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn get(&self, name: &str) -> Option<&ConditionCheck> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &ConditionCheck> {
        self.checks.iter().filter(|c| !c.passed)
    }

    /// `Ok` when every condition holds, otherwise a schedule-infeasible error
    /// naming the failures.
    pub fn into_result(self) -> Result<()> {
        if self.passed() {
            return Ok(());
        }
        let detail: Vec<String> = self
            .failures()
            .map(|c| match c.first_violation {
                Some(k) => format!("{} (first violated at k = {k})", c.name),
                None => c.name.to_string(),
            })
            .collect();
        Err(Error::ScheduleInfeasible(detail.join(", ")))
    }

    fn push(&mut self, name: &'static str, first_violation: Option<usize>) {
        self.checks.push(ConditionCheck {
            name,
            passed: first_violation.is_none(),
            first_violation,
        });
    }

    fn check(&mut self, name: &'static str, range: impl IntoIterator<Item = usize>, ok: impl Fn(usize) -> bool) {
        let first = range.into_iter().find(|&k| !ok(k));
        self.push(name, first);
    }
}

fn earliest(slot: &mut Option<usize>, k: usize) {
    *slot = Some(slot.map_or(k, |s| s.min(k)));
}

fn le(a: f64, b: f64) -> bool {
    a <= b + REL_TOL * a.abs().max(b.abs())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= REL_TOL * a.abs().max(b.abs()).max(f64::MIN_POSITIVE)
}

/// Inner steps beyond this are not re-checked one by one: the step rules
/// are the same closed forms at every `t`.
pub const INNER_CHECK_LIMIT: usize = 1 << 24;

struct InnerConditions {
    lam_1: bool,
    mu_l: bool,
    beta_lambda: bool,
}

/// Streams `t = 1..=min(T, INNER_CHECK_LIMIT)` without storing the arrays.
fn inner_conditions(inner: &InnerSchedule) -> InnerConditions {
    let mut out = InnerConditions {
        lam_1: InnerSchedule::lambda(1) == 1.0,
        mu_l: true,
        beta_lambda: true,
    };
    let mut cap_lambda = 1.0;
    let mut ratio0 = None;
    for t in 1..=inner.steps.min(INNER_CHECK_LIMIT) {
        let lambda = InnerSchedule::lambda(t);
        let beta = inner.beta(t);
        if t > 1 {
            cap_lambda *= 1.0 - lambda;
        }
        if !(inner.mu + inner.eta + beta > inner.smoothness * lambda * lambda) {
            out.mu_l = false;
        }
        let ratio = beta / cap_lambda;
        match ratio0 {
            None => ratio0 = Some(ratio),
            Some(r0) if !close(ratio, r0) => out.beta_lambda = false,
            Some(_) => {}
        }
    }
    out
}

/// Checks every condition the regime's convergence guarantee relies on.
///
/// Conditions stated for `k` up to `N + 1` are only checked where both
/// indices exist.
pub fn validate_schedule(
    s: &OuterSchedule,
    m: usize,
    d_max: usize,
    consts: &ProblemClassConstants,
) -> ValidationReport {
    let mut r = ValidationReport::default();
    let n = s.n;
    let (mf, d2) = (m as f64, (d_max * d_max) as f64);

    let arrays_ok = s.alpha.len() == n
        && s.tau.len() == n
        && s.eta.len() == n
        && s.theta_hat.len() == n + 1
        && s.theta.len() == n + 1
        && s.inner_steps.as_ref().is_none_or(|t| t.len() == n);
    r.push("array_lengths", (!arrays_ok).then_some(0));
    if !arrays_ok {
        return r;
    }

    let sum_hat = vecops::compensated_sum(s.theta_hat.iter().copied());
    let sum = vecops::compensated_sum(s.theta.iter().copied());
    r.push("theta_hat_sums_to_one", ((sum_hat - 1.0).abs() > 1e-12).then_some(0));
    r.push("theta_sums_to_one", ((sum - 1.0).abs() > 1e-12).then_some(0));
    r.check("theta_hat_nonnegative", 0..=n, |k| s.theta_hat[k] >= 0.0);
    let derived = theta_from_theta_hat(&s.theta_hat, m);
    r.check("theta_recursion", 0..=n, |k| close(derived[k], s.theta[k]));
    r.check("tau_positive", 1..=n, |k| s.tau(k) > 0.0);
    r.check("eta_positive", 1..=n, |k| s.eta(k) > 0.0);

    let th = &s.theta_hat;
    r.check("theta_tau", 2..=n, |k| close(th[k] * s.tau(k), th[k - 1] * s.tau(k - 1)));

    match s.regime {
        Regime::Adpd => {
            r.check("theta_eta", 2..=n, |k| le(th[k] * s.eta(k), th[k - 1] * s.eta(k - 1)));
            r.check("alpha_theta", 2..=n, |k| close(s.alpha(k) * th[k], mf * th[k - 1]));
            r.check("eta_tau_alpha1", 2..=n, |k| {
                le(4.0 * mf * s.alpha(k) * d2, s.eta(k - 1) * s.tau(k))
            });
            r.check("eta_tau_alpha2", 1..=n, |k| {
                le(4.0 * (mf - 1.0).powi(2) * d2, s.eta(k) * s.tau(k))
            });
        }
        Regime::AasdcsConvex | Regime::AasdcsStronglyConvex => {
            let Some(steps) = s.inner_steps.as_ref() else {
                r.push("inner_steps_present", Some(0));
                return r;
            };
            r.check("inner_steps_positive", 1..=n, |k| steps[k - 1] >= 1);
            let smooth = consts.growth_c + consts.lip_l;
            let prox_term = |k: usize| {
                let t = steps[k - 1] as f64;
                smooth / (t * (t + 1.0)) + s.eta(k)
            };
            if s.regime == Regime::AasdcsConvex {
                r.check("theta_Tk_eta", 2..=n, |k| {
                    le(th[k] * prox_term(k), th[k - 1] * prox_term(k - 1))
                });
            } else {
                let mu = consts.mu;
                r.check("theta_Tk_eta_s", 2..=n, |k| {
                    le(th[k] * prox_term(k), th[k - 1] * (prox_term(k - 1) + mu))
                });
                r.check("eta_lower_bound", 1..=n, |k| {
                    le((k as f64 + 3.0 * mf + 1.0) * mu / 4.0, s.eta(k))
                });
            }
            r.check("alpha_htheta", 2..=n, |k| close(s.alpha(k) * th[k], th[k - 1]));
            r.check("alpha_d_eta_tau", 2..=n, |k| {
                le(8.0 * mf * s.alpha(k) * d2, s.eta(k - 1) * s.tau(k))
            });
            r.check("m_d_eta_tau", 1..=n, |k| {
                le(8.0 * (mf - 1.0).powi(2) * d2, mf * s.eta(k) * s.tau(k))
            });

            // Inner-loop conditions, once per distinct T_k. The mu_L condition
            // is monotone in eta, so the smallest eta paired with T_k decides it.
            let mut smallest_eta: Vec<(usize, f64, usize)> = Vec::new();
            for k in 1..=n {
                let t = steps[k - 1];
                match smallest_eta.iter_mut().find(|e| e.0 == t) {
                    Some(e) if s.eta(k) < e.1 => *e = (t, s.eta(k), k),
                    Some(_) => {}
                    None => smallest_eta.push((t, s.eta(k), k)),
                }
            }
            let mut lam_1 = None;
            let mut mu_l = None;
            let mut beta_lambda = None;
            for &(t_k, eta, k) in &smallest_eta {
                let inner = InnerSchedule {
                    steps: t_k,
                    smoothness: s.inner_smoothness,
                    mu: s.inner_mu,
                    eta,
                };
                let c = inner_conditions(&inner);
                if !c.lam_1 {
                    earliest(&mut lam_1, k);
                }
                if !c.mu_l {
                    earliest(&mut mu_l, k);
                }
                if !c.beta_lambda {
                    earliest(&mut beta_lambda, k);
                }
            }
            r.push("lam_1", lam_1);
            r.push("mu_L", mu_l);
            r.push("beta_Lambda", beta_lambda);
        }
    }
    r
}
