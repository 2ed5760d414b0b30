//! Communication topologies and the Laplacian encoding of consensus.
//!
//! The Laplacian is stored row-wise over each agent's neighbourhood `N_i`,
//! which includes the agent itself. The self entry carries the degree
//! `|N_i| - 1` and every true neighbour carries `-1`, so the self-loop adds no
//! Laplacian weight while neighbour iteration still visits `i`.

use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;

use crate::error::{Error, Result};
use crate::rng::aux_stream;
use crate::vecops;

/// Resampling budget for Erdős–Rényi graphs that come out disconnected.
pub const ER_MAX_ATTEMPTS: usize = 1000;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum TopologyKind {
    Ring,
    Path,
    Complete,
    ErdosRenyi { p: f64, seed: u64 },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Topology {
    m: usize,
    edges: Vec<(usize, usize)>,
    /// `neighbors[i]` is `N_i` in ascending order, self included.
    neighbors: Vec<Vec<usize>>,
    /// Laplacian coefficients aligned with `neighbors[i]`.
    coeffs: Vec<Vec<i64>>,
    d_max: usize,
}

impl Topology {
    pub fn build(kind: TopologyKind, m: usize) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("topology needs m >= 2 agents, got {m}")));
        }
        match kind {
            TopologyKind::Path => Self::from_edges(m, (0..m - 1).map(|i| (i, i + 1))),
            TopologyKind::Ring => {
                let mut edges: Vec<_> = (0..m - 1).map(|i| (i, i + 1)).collect();
                if m > 2 {
                    edges.push((0, m - 1));
                }
                Self::from_edges(m, edges)
            }
            TopologyKind::Complete => {
                Self::from_edges(m, (0..m).flat_map(|i| (i + 1..m).map(move |j| (i, j))))
            }
            TopologyKind::ErdosRenyi { p, seed } => erdos_renyi(m, p, seed),
        }
    }

    /// Builds a topology from undirected edges. Duplicate pairs collapse;
    /// self-loops and out-of-range endpoints are rejected, and the graph must
    /// be connected.
    pub fn from_edges(m: usize, edges: impl IntoIterator<Item = (usize, usize)>) -> Result<Self> {
        if m < 2 {
            return Err(Error::invalid(format!("topology needs m >= 2 agents, got {m}")));
        }
        let mut list = Vec::new();
        for (a, b) in edges {
            if a >= m || b >= m {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range for m = {m}")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop edge ({a}, {a}) is implicit")));
            }
            list.push((a.min(b), a.max(b)));
        }
        list.sort_unstable();
        list.dedup();

        let mut adj = vec![Vec::new(); m];
        for &(a, b) in &list {
            adj[a].push(b);
            adj[b].push(a);
        }
        if !is_connected(&adj) {
            return Err(Error::TopologyGeneration("graph is not connected".into()));
        }

        let mut neighbors = Vec::with_capacity(m);
        let mut coeffs = Vec::with_capacity(m);
        for (i, nb) in adj.iter().enumerate() {
            let mut row: Vec<usize> = nb.iter().copied().chain(std::iter::once(i)).collect();
            row.sort_unstable();
            let degree = nb.len() as i64;
            coeffs.push(row.iter().map(|&j| if j == i { degree } else { -1 }).collect());
            neighbors.push(row);
        }
        let d_max = adj.iter().map(Vec::len).max().unwrap_or(0);
        Ok(Topology {
            m,
            edges: list,
            neighbors,
            coeffs,
            d_max,
        })
    }

    pub fn m(&self) -> usize {
        self.m
    }

    /// Maximum degree, `max_i |N_i| - 1`.
    pub fn d_max(&self) -> usize {
        self.d_max
    }

    /// Sorted undirected edges `(i, j)` with `i < j`.
    pub fn edges(&self) -> &[(usize, usize)] {
        &self.edges
    }

    /// `N_i`, including `i`.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.neighbors[i].len() - 1
    }

    /// Non-zero structure of Laplacian row `i` as `(j, L_ij)` pairs.
    pub fn laplacian_row(&self, i: usize) -> impl Iterator<Item = (usize, i64)> + '_ {
        self.neighbors[i].iter().copied().zip(self.coeffs[i].iter().copied())
    }

    pub fn laplacian_entry(&self, i: usize, j: usize) -> i64 {
        match self.neighbors[i].binary_search(&j) {
            Ok(pos) => self.coeffs[i][pos],
            Err(_) => 0,
        }
    }

    pub fn dense_laplacian(&self) -> Vec<Vec<i64>> {
        (0..self.m)
            .map(|i| (0..self.m).map(|j| self.laplacian_entry(i, j)).collect())
            .collect()
    }

    /// Gathers `sum_{j in N_i} L_ij * message(j)` into `out`.
    ///
    /// `message(j, buf)` must write agent `j`'s vector into `buf`; it is
    /// called exactly once per member of `N_i` and never for anyone else.
    pub fn apply_row_with<F>(&self, i: usize, out: &mut [f64], mut message: F)
    where
        F: FnMut(usize, &mut [f64]),
    {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut buf = vec![0.0; out.len()];
        for (j, c) in self.laplacian_row(i) {
            message(j, &mut buf);
            vecops::axpy(c as f64, &buf, out);
        }
    }

    /// `sum_{j in N_i} L_ij xs[j]`.
    pub fn apply_laplacian_row(&self, i: usize, xs: &[Vec<f64>]) -> Result<Vec<f64>> {
        if i >= self.m {
            return Err(Error::invalid(format!("agent {i} out of range for m = {}", self.m)));
        }
        Error::check_dim(self.m, xs.len())?;
        let d = xs[0].len();
        for x in xs {
            Error::check_dim(d, x.len())?;
        }
        let mut out = vec![0.0; d];
        self.apply_row_with(i, &mut out, |j, buf| buf.copy_from_slice(&xs[j]));
        Ok(out)
    }

    /// Stacked `L x`, one block per agent.
    pub fn apply_laplacian(&self, xs: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
        (0..self.m).map(|i| self.apply_laplacian_row(i, xs)).collect()
    }

    /// `||L x||`, the disagreement among the agents' copies.
    pub fn feasibility_residual(&self, xs: &[Vec<f64>]) -> Result<f64> {
        Ok(vecops::stacked_norm_sq(&self.apply_laplacian(xs)?).sqrt())
    }

    /// Plain-text edge list: `m` on the first line, then one `i j` pair per
    /// line, 0-based and sorted.
    pub fn to_edge_list(&self) -> String {
        let mut s = format!("{}\n", self.m);
        for (a, b) in &self.edges {
            let _ = writeln!(s, "{a} {b}");
        }
        s
    }

    pub fn from_edge_list(text: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: "<edge list>".into(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .filter(|(_, l)| !l.trim().is_empty());
        let (ln, first) = lines.next().ok_or_else(|| parse_err(1, "empty edge list".into()))?;
        let m: usize = first
            .trim()
            .parse()
            .map_err(|_| parse_err(ln + 1, format!("expected agent count, got {first:?}")))?;
        let mut edges = Vec::new();
        for (ln, line) in lines {
            let mut it = line.split_whitespace().map(str::parse::<usize>);
            match (it.next(), it.next(), it.next()) {
                (Some(Ok(a)), Some(Ok(b)), None) => edges.push((a, b)),
                _ => return Err(parse_err(ln + 1, format!("expected `i j`, got {line:?}"))),
            }
        }
        Self::from_edges(m, edges)
    }

    pub fn write_edge_list(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_edge_list())?;
        Ok(())
    }

    pub fn read_edge_list(path: &Path) -> Result<Self> {
        Self::from_edge_list(&std::fs::read_to_string(path)?)
    }
}

fn erdos_renyi(m: usize, p: f64, seed: u64) -> Result<Topology> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(Error::invalid(format!("edge probability must be in (0, 1], got {p}")));
    }
    let mut rng = aux_stream(seed);
    for _ in 0..ER_MAX_ATTEMPTS {
        let mut edges = Vec::new();
        for i in 0..m {
            for j in i + 1..m {
                if rng.random::<f64>() < p {
                    edges.push((i, j));
                }
            }
        }
        match Topology::from_edges(m, edges) {
            Ok(t) => return Ok(t),
            Err(Error::TopologyGeneration(_)) => continue,
            Err(e) => return Err(e),
        }
    }
    Err(Error::TopologyGeneration(format!(
        "no connected Erdős–Rényi graph (m = {m}, p = {p}, seed = {seed}) after {ER_MAX_ATTEMPTS} draws"
    )))
}

fn is_connected(adj: &[Vec<usize>]) -> bool {
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(i) = queue.pop_front() {
        for &j in &adj[i] {
            if !seen[j] {
                seen[j] = true;
                count += 1;
                queue.push_back(j);
            }
        }
    }
    count == adj.len()
}
