//! Labelled sparse datasets and the LIBSVM text format.

use std::path::Path;

use rand::seq::index;

use crate::error::{Error, Result};
use crate::rng::aux_stream;

/// Sparse feature vector with 0-based, strictly increasing indices.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct SparseVector {
    pub indices: Vec<usize>,
    pub values: Vec<f64>,
}

impl SparseVector {
    pub fn new(mut pairs: Vec<(usize, f64)>) -> Self {
        pairs.sort_by_key(|&(i, _)| i);
        let (indices, values) = pairs.into_iter().unzip();
        SparseVector { indices, values }
    }

    pub fn dot(&self, x: &[f64]) -> f64 {
        self.indices.iter().zip(&self.values).map(|(&i, v)| v * x[i]).sum()
    }

    /// `out += a * self`
    pub fn axpy_into(&self, a: f64, out: &mut [f64]) {
        for (&i, v) in self.indices.iter().zip(&self.values) {
            out[i] += a * v;
        }
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn to_dense(&self, dim: usize) -> Vec<f64> {
        let mut out = vec![0.0; dim];
        self.axpy_into(1.0, &mut out);
        out
    }

    fn max_index(&self) -> Option<usize> {
        self.indices.last().copied()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Sample {
    /// `-1.0` or `+1.0`.
    pub label: f64,
    pub features: SparseVector,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    samples: Vec<Sample>,
    dim: usize,
}

impl Dataset {
    pub fn new(samples: Vec<Sample>, dim: usize) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::invalid("dataset has no samples"));
        }
        for (n, s) in samples.iter().enumerate() {
            if s.label != 1.0 && s.label != -1.0 {
                return Err(Error::invalid(format!("sample {n} has label {} outside {{-1, +1}}", s.label)));
            }
            if let Some(i) = s.features.max_index() {
                if i >= dim {
                    return Err(Error::invalid(format!(
                        "sample {n} uses feature {} beyond dimension {dim}",
                        i + 1
                    )));
                }
            }
        }
        Ok(Dataset { samples, dim })
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// `count` samples drawn without replacement, kept in file order.
    pub fn subsample(&self, count: usize, seed: u64) -> Result<Dataset> {
        if count == 0 || count > self.len() {
            return Err(Error::invalid(format!(
                "subsample size {count} not in 1..={}",
                self.len()
            )));
        }
        let mut picked = index::sample(&mut aux_stream(seed), self.len(), count).into_vec();
        picked.sort_unstable();
        Dataset::new(picked.into_iter().map(|i| self.samples[i].clone()).collect(), self.dim)
    }

    /// Contiguous near-even split over `m` agents; shard sizes differ by at
    /// most one and every sample lands in exactly one shard.
    pub fn partition(&self, m: usize) -> Result<Vec<Vec<usize>>> {
        if m == 0 || m > self.len() {
            return Err(Error::invalid(format!(
                "cannot split {} samples over {m} agents without an empty shard",
                self.len()
            )));
        }
        let base = self.len() / m;
        let extra = self.len() % m;
        let mut start = 0;
        Ok((0..m)
            .map(|i| {
                let size = base + usize::from(i < extra);
                let shard = (start..start + size).collect();
                start += size;
                shard
            })
            .collect())
    }
}

/// Reads a LIBSVM sparse text file (`label idx:val ...`, 1-based indices).
///
/// Labels must be all in `{-1, +1}` or all in `{0, 1}`; the latter maps
/// `0 -> -1`. The dimension is the largest index seen.
pub fn load_libsvm(path: &Path) -> Result<Dataset> {
    load_libsvm_with_dim(path, None)
}

pub fn load_libsvm_with_dim(path: &Path, dim: Option<usize>) -> Result<Dataset> {
    let text = std::fs::read_to_string(path)?;
    parse_libsvm(&text, path, dim)
}

fn parse_libsvm(text: &str, path: &Path, dim_override: Option<usize>) -> Result<Dataset> {
    let err = |line: usize, msg: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        msg,
    };

    let mut raw: Vec<(usize, f64, SparseVector)> = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let lineno = n + 1;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let label_tok = tokens.next().unwrap_or_default();
        let label: f64 = label_tok
            .parse()
            .map_err(|_| err(lineno, format!("bad label {label_tok:?}")))?;
        let mut pairs = Vec::new();
        let mut last = 0usize;
        for tok in tokens {
            let (i, v) = tok
                .split_once(':')
                .ok_or_else(|| err(lineno, format!("expected idx:val, got {tok:?}")))?;
            let i: usize = i
                .parse()
                .map_err(|_| err(lineno, format!("bad feature index {i:?}")))?;
            let v: f64 = v
                .parse()
                .map_err(|_| err(lineno, format!("bad feature value {v:?}")))?;
            if i == 0 {
                return Err(err(lineno, "feature indices are 1-based".into()));
            }
            if i <= last {
                return Err(err(lineno, format!("feature index {i} not increasing")));
            }
            last = i;
            pairs.push((i - 1, v));
        }
        raw.push((lineno, label, SparseVector::new(pairs)));
    }
    if raw.is_empty() {
        return Err(err(1, "no samples in file".into()));
    }

    let zero_one = raw.iter().any(|(_, l, _)| *l == 0.0);
    let mut samples = Vec::with_capacity(raw.len());
    for (lineno, label, features) in raw {
        let mapped = match (zero_one, label) {
            (true, 0.0) => -1.0,
            (true, 1.0) => 1.0,
            (false, l) if l == 1.0 || l == -1.0 => l,
            (_, l) => {
                let expected = if zero_one { "{0, 1}" } else { "{-1, +1}" };
                return Err(err(lineno, format!("label {l} outside {expected}")));
            }
        };
        samples.push(Sample {
            label: mapped,
            features,
        });
    }

    let seen = samples
        .iter()
        .filter_map(|s| s.features.max_index())
        .max()
        .map_or(0, |i| i + 1);
    let dim = match dim_override {
        Some(d) if d < seen => {
            return Err(Error::invalid(format!(
                "dimension override {d} smaller than largest feature index {seen}"
            )))
        }
        Some(d) => d,
        None => seen.max(1),
    };
    Dataset::new(samples, dim)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<Dataset> {
        parse_libsvm(text, Path::new("mem"), None)
    }

    #[test]
    fn parses_sparse_line() {
        let d = parse("+1 1:0.5 3:2\n").unwrap();
        assert_eq!(d.dim(), 3);
        let s = &d.samples()[0];
        assert_eq!(s.label, 1.0);
        assert_eq!(s.features.indices, vec![0, 2]);
        assert_eq!(s.features.values, vec![0.5, 2.0]);
    }

    #[test]
    fn zero_one_labels_map_to_signs() {
        let d = parse("0 1:1\n1 2:1\n").unwrap();
        assert_eq!(d.samples()[0].label, -1.0);
        assert_eq!(d.samples()[1].label, 1.0);
    }

    #[test]
    fn empty_file_is_an_error() {
        assert!(matches!(parse(""), Err(Error::Parse { .. })));
        assert!(matches!(parse("\n  \n"), Err(Error::Parse { .. })));
    }

    #[test]
    fn errors_carry_line_numbers() {
        match parse("+1 1:1\n-1 2:x\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        match parse("+1 1:1\n\n2 1:1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
        // mixing -1 with 0 is ambiguous
        match parse("0 1:1\n-1 1:1\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 2),
            other => panic!("unexpected {other:?}"),
        }
        assert!(parse("+1 0:1\n").is_err());
        assert!(parse("+1 3:1 2:1\n").is_err());
    }

    #[test]
    fn partition_is_near_even_and_exhaustive() {
        let samples = (0..11)
            .map(|i| Sample {
                label: if i % 2 == 0 { 1.0 } else { -1.0 },
                features: SparseVector::new(vec![(0, i as f64)]),
            })
            .collect();
        let d = Dataset::new(samples, 1).unwrap();
        let parts = d.partition(4).unwrap();
        let sizes: Vec<_> = parts.iter().map(Vec::len).collect();
        assert_eq!(sizes, vec![3, 3, 3, 2]);
        let mut all: Vec<_> = parts.concat();
        all.sort_unstable();
        assert_eq!(all, (0..11).collect::<Vec<_>>());
        assert!(d.partition(12).is_err());
    }

    #[test]
    fn subsample_is_seeded() {
        let samples = (0..50)
            .map(|i| Sample {
                label: 1.0,
                features: SparseVector::new(vec![(0, i as f64)]),
            })
            .collect();
        let d = Dataset::new(samples, 1).unwrap();
        let a = d.subsample(10, 3).unwrap();
        assert_eq!(a, d.subsample(10, 3).unwrap());
        assert_eq!(a.len(), 10);
        assert!(d.subsample(51, 3).is_err());
    }
}
