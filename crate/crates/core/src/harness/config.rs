//! Flat `key = value` experiment configs with command-line overrides.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use crate::error::{Error, Result};
use crate::graph::TopologyKind;
use crate::problems::RegularizerKind;

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "ASYNCPD_OUT";
const DEFAULT_OUT: &str = "runs";

pub const VALID_KEYS: &[&str] = &[
    "topology",
    "m",
    "p",
    "topology_seed",
    "problem",
    "dim",
    "q",
    "center_seed",
    "center_scale",
    "sigma",
    "dataset",
    "subsample",
    "subsample_seed",
    "reg_weight",
    "algo",
    "regime",
    "N",
    "seeds",
    "D",
    "T",
    "out",
    "log_every",
    "wall_time",
    "reference_budget",
    "reference_tol",
];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Algorithm {
    Adpd,
    Aasdcs,
}

impl Algorithm {
    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Adpd => "adpd",
            Algorithm::Aasdcs => "aasdcs",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegimeChoice {
    Convex,
    StronglyConvex,
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    /// Centres drawn uniformly from `[-center_scale, center_scale]^dim`.
    Quadratic {
        dim: usize,
        q: f64,
        center_seed: u64,
        center_scale: f64,
        sigma: f64,
    },
    Svm {
        regularizer: RegularizerKind,
        dataset: PathBuf,
        subsample: Option<usize>,
        subsample_seed: u64,
        reg_weight: Option<f64>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub topology: TopologyKind,
    pub m: usize,
    pub problem: ProblemSpec,
    pub algo: Algorithm,
    pub regime: RegimeChoice,
    pub n: usize,
    pub seeds: Vec<u64>,
    pub d_const: Option<f64>,
    pub inner_steps: Option<usize>,
    pub out: PathBuf,
    pub log_every: usize,
    pub wall_time: bool,
    pub reference_budget: usize,
    pub reference_tol: f64,
}

/// Raw `key -> value` pairs before typing. Later sources override earlier
/// ones through [`RawConfig::set`].
#[derive(Clone, Debug, Default, PartialEq)]
pub struct RawConfig {
    values: BTreeMap<String, String>,
}

impl RawConfig {
    /// Parses config text: one `key = value` per line, `#` starts a comment.
    /// A key repeated within one file is an error.
    pub fn parse(text: &str) -> Result<Self> {
        let mut raw = RawConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key = value, got {line:?}", n + 1)))?;
            let k = k.trim();
            if raw.values.contains_key(k) {
                return Err(Error::Config(format!("line {}: key {k:?} set twice", n + 1)));
            }
            raw.set(k, v.trim())?;
        }
        Ok(raw)
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read config {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        if !VALID_KEYS.contains(&key) {
            return Err(Error::Config(format!(
                "unknown key {key:?}; valid keys: {}",
                VALID_KEYS.join(", ")
            )));
        }
        self.values.insert(key.to_string(), value.to_string());
        Ok(())
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parse_or<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T> {
        self.parse_opt(key).map(|v| v.unwrap_or(default))
    }

    fn parse_opt<T: std::str::FromStr>(&self, key: &str) -> Result<Option<T>> {
        self.get(key)
            .map(|v| {
                v.parse()
                    .map_err(|_| Error::Config(format!("bad value {v:?} for key {key}")))
            })
            .transpose()
    }

    /// Types and checks the pairs. Checks that need the built problem (for
    /// example `mu > 0` in the strongly convex regime) happen later.
    pub fn build(&self) -> Result<ExperimentConfig> {
        let n: usize = self
            .parse_opt("N")?
            .ok_or_else(|| Error::Config("missing required key N (iteration budget)".into()))?;
        if n == 0 {
            return Err(Error::Config("N must be >= 1".into()));
        }
        let m: usize = self.parse_or("m", 4)?;
        let topology = match self.get("topology").unwrap_or("ring") {
            "ring" => TopologyKind::Ring,
            "path" => TopologyKind::Path,
            "complete" => TopologyKind::Complete,
            "erdos_renyi" | "er" => TopologyKind::ErdosRenyi {
                p: self.parse_or("p", 0.5)?,
                seed: self.parse_or("topology_seed", 0)?,
            },
            other => {
                return Err(Error::Config(format!(
                    "unknown topology {other:?}; expected ring, path, complete or erdos_renyi"
                )))
            }
        };

        let svm = |regularizer| -> Result<ProblemSpec> {
            let dataset = self
                .get("dataset")
                .ok_or_else(|| Error::Config("SVM problems need a dataset path".into()))?;
            Ok(ProblemSpec::Svm {
                regularizer,
                dataset: PathBuf::from(dataset),
                subsample: self.parse_opt("subsample")?,
                subsample_seed: self.parse_or("subsample_seed", 0)?,
                reg_weight: self.parse_opt("reg_weight")?,
            })
        };
        let problem = match self.get("problem").unwrap_or("quadratic") {
            "quadratic" => ProblemSpec::Quadratic {
                dim: self.parse_or("dim", 2)?,
                q: self.parse_or("q", 1.0)?,
                center_seed: self.parse_or("center_seed", 0)?,
                center_scale: self.parse_or("center_scale", 1.0)?,
                sigma: self.parse_or("sigma", 0.0)?,
            },
            "svm_l1" => svm(RegularizerKind::L1)?,
            "svm_l2" => svm(RegularizerKind::L2)?,
            other => {
                return Err(Error::Config(format!(
                    "unknown problem {other:?}; expected quadratic, svm_l1 or svm_l2"
                )))
            }
        };

        let algo = match self.get("algo").unwrap_or("aasdcs") {
            "adpd" => Algorithm::Adpd,
            "aasdcs" => Algorithm::Aasdcs,
            other => return Err(Error::Config(format!("unknown algo {other:?}; expected adpd or aasdcs"))),
        };
        let regime = match self.get("regime").unwrap_or("convex") {
            "convex" => RegimeChoice::Convex,
            "strongly_convex" => RegimeChoice::StronglyConvex,
            other => {
                return Err(Error::Config(format!(
                    "unknown regime {other:?}; expected convex or strongly_convex"
                )))
            }
        };
        if algo == Algorithm::Adpd {
            if let ProblemSpec::Svm { .. } = problem {
                return Err(Error::Config(
                    "algo=adpd requires an exact-prox problem (closed-form local prox); SVM hinge losses need algo=aasdcs"
                        .into(),
                ));
            }
            if regime == RegimeChoice::StronglyConvex {
                return Err(Error::Config("regime applies to algo=aasdcs only".into()));
            }
            if self.get("D").is_some() || self.get("T").is_some() {
                return Err(Error::Config("D and T apply to algo=aasdcs only".into()));
            }
        }

        let seeds = match self.get("seeds") {
            Some(s) => parse_seeds(s)?,
            None => vec![0],
        };
        let out = match self.get("out") {
            Some(o) => PathBuf::from(o),
            None => std::env::var_os(OUT_ENV).map_or_else(|| PathBuf::from(DEFAULT_OUT), PathBuf::from),
        };
        let log_every: usize = self.parse_or("log_every", 10)?;
        if log_every == 0 {
            return Err(Error::Config("log_every must be >= 1".into()));
        }
        let wall_time = match self.get("wall_time").unwrap_or("false") {
            "true" | "1" | "yes" => true,
            "false" | "0" | "no" => false,
            other => return Err(Error::Config(format!("bad value {other:?} for key wall_time"))),
        };
        let inner_steps: Option<usize> = self.parse_opt("T")?;
        if inner_steps == Some(0) {
            return Err(Error::Config("T must be >= 1".into()));
        }
        let d_const: Option<f64> = self.parse_opt("D")?;
        if d_const.is_some_and(|d| !(d > 0.0)) {
            return Err(Error::Config("D must be positive".into()));
        }

        Ok(ExperimentConfig {
            topology,
            m,
            problem,
            algo,
            regime,
            n,
            seeds,
            d_const,
            inner_steps,
            out,
            log_every,
            wall_time,
            reference_budget: self.parse_or("reference_budget", 1 << 22)?,
            reference_tol: self.parse_or("reference_tol", 1e-6)?,
        })
    }
}

/// `1,2,3`, `[1, 2, 3]` or a half-open range `0..20`.
pub fn parse_seeds(s: &str) -> Result<Vec<u64>> {
    let bad = || Error::Config(format!("bad seed list {s:?}; expected e.g. 1,2,3 or 0..20"));
    let body = s.trim().trim_start_matches('[').trim_end_matches(']').trim();
    let seeds: Vec<u64> = if let Some((a, b)) = body.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        (a..b).collect()
    } else {
        body.split(',')
            .map(|t| t.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if seeds.is_empty() {
        return Err(bad());
    }
    let mut sorted = seeds.clone();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return Err(Error::Config(format!("duplicate seed in {s:?}")));
    }
    Ok(seeds)
}
