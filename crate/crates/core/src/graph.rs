//! Sparse graphs and their normalized propagation operators.
//!
//! Houses the symmetric adjacency structure `A`, the self-loop-augmented
//! normalization `D~^{-1/2} (A + I) D~^{-1/2}`, the plain normalization
//! `D^{-1/2} A D^{-1/2}`, Laplacian smoothness `f^T L f`, the one-step
//! signal-recovery update `(I - 2cL) f`, and the structural edge-overlap
//! metric between two graphs.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::{for_each_row, Dense};
use crate::Result;

/// Undirected graph over `n` nodes stored as sorted, symmetric adjacency
/// lists. Edge weights default to 1.0; self-loops exist only when explicitly
/// added.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseGraph {
    n: usize,
    adj: Vec<Vec<(usize, f64)>>,
}

impl SparseGraph {
    pub fn new(n: usize) -> Self {
        SparseGraph {
            n,
            adj: vec![Vec::new(); n],
        }
    }

    /// Builds a unit-weight graph from an undirected edge list. Rejects
    /// out-of-range indices and duplicate edges (in either orientation).
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut g = SparseGraph::new(n);
        for &(i, j) in edges {
            g.add_edge(i, j, 1.0)?;
        }
        Ok(g)
    }

    /// Adds the undirected edge `{i, j}` with the given weight. `i == j`
    /// creates an explicit self-loop.
    pub fn add_edge(&mut self, i: usize, j: usize, weight: f64) -> Result<()> {
        for &v in &[i, j] {
            if v >= self.n {
                return Err(Error::IndexOutOfRange { index: v, n: self.n });
            }
        }
        if self.adj[i].binary_search_by_key(&j, |&(c, _)| c).is_ok() {
            return Err(Error::InvalidArgument(alloc::format!(
                "duplicate edge ({i}, {j})"
            )));
        }
        let pos = self.adj[i].binary_search_by_key(&j, |&(c, _)| c).unwrap_err();
        self.adj[i].insert(pos, (j, weight));
        if i != j {
            let pos = self.adj[j].binary_search_by_key(&i, |&(c, _)| c).unwrap_err();
            self.adj[j].insert(pos, (i, weight));
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Sorted `(neighbor, weight)` list of node `i`.
    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adj[i]
    }

    /// Weighted degree: row sum of the adjacency matrix.
    pub fn degree(&self, i: usize) -> f64 {
        self.adj[i].iter().map(|&(_, w)| w).sum()
    }

    /// Number of undirected edges (self-loops count once).
    pub fn num_edges(&self) -> usize {
        let directed: usize = self.adj.iter().map(Vec::len).sum();
        let self_loops = (0..self.n)
            .filter(|&i| self.adj[i].binary_search_by_key(&i, |&(c, _)| c).is_ok())
            .count();
        (directed - self_loops) / 2 + self_loops
    }

    /// Structural nonzeros of the adjacency matrix (off-diagonal entries
    /// count in both orientations).
    pub fn nnz(&self) -> usize {
        self.adj.iter().map(Vec::len).sum()
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        self.adj[i].binary_search_by_key(&j, |&(c, _)| c).is_ok()
    }

    /// Iterates undirected edges as `(i, j, w)` with `i <= j`, ordered.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        self.adj
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().filter_map(move |&(j, w)| (i <= j).then_some((i, j, w))))
    }

    /// Structural union with unit weights, used for the `A + Af` baseline.
    pub fn union(&self, other: &SparseGraph) -> Result<SparseGraph> {
        if self.n != other.n {
            return Err(Error::DimensionMismatch {
                what: "graph union",
                expected: self.n,
                got: other.n,
            });
        }
        let mut g = SparseGraph::new(self.n);
        for (i, j, _) in self.edges() {
            g.add_edge(i, j, 1.0)?;
        }
        for (i, j, _) in other.edges() {
            if !g.has_edge(i, j) {
                g.add_edge(i, j, 1.0)?;
            }
        }
        Ok(g)
    }

    /// `D~^{-1/2} (A + I) D~^{-1/2}` with `D~` the row sums of `A + I`.
    /// An isolated node keeps the single diagonal entry 1.
    pub fn normalize_with_self_loops(&self) -> Propagator {
        let dt: Vec<f64> = (0..self.n).map(|i| 1.0 + self.degree(i)).collect();
        let inv_sqrt: Vec<f64> = dt.iter().map(|&d| 1.0 / libm::sqrt(d)).collect();
        let mut builder = CsrBuilder::new(self.n);
        for i in 0..self.n {
            let mut diag_done = false;
            for &(j, w) in &self.adj[i] {
                let mut v = w * inv_sqrt[i] * inv_sqrt[j];
                if j == i {
                    // explicit self-loop merges with the +I term
                    v += inv_sqrt[i] * inv_sqrt[i];
                    diag_done = true;
                }
                if !diag_done && j > i {
                    builder.push(i, i, inv_sqrt[i] * inv_sqrt[i]);
                    diag_done = true;
                }
                builder.push(i, j, v);
            }
            if !diag_done {
                builder.push(i, i, inv_sqrt[i] * inv_sqrt[i]);
            }
            builder.end_row();
        }
        builder.finish()
    }

    /// `D^{-1/2} A D^{-1/2}` without added self-loops. Zero-degree rows are
    /// all-zero.
    pub fn normalize_plain(&self) -> Propagator {
        let inv_sqrt: Vec<f64> = (0..self.n)
            .map(|i| {
                let d = self.degree(i);
                if d > 0.0 {
                    1.0 / libm::sqrt(d)
                } else {
                    0.0
                }
            })
            .collect();
        let mut builder = CsrBuilder::new(self.n);
        for i in 0..self.n {
            for &(j, w) in &self.adj[i] {
                builder.push(i, j, w * inv_sqrt[i] * inv_sqrt[j]);
            }
            builder.end_row();
        }
        builder.finish()
    }
}

/// Signal smoothness `f^T L f` with `L = I - D~^{-1/2} (A + I) D~^{-1/2}`,
/// evaluated in the edge-sum form
/// `1/2 * sum_ij A~_ij (f_i / sqrt(1 + d_i) - f_j / sqrt(1 + d_j))^2`.
/// Diagonal terms of `A~` contribute zero and are skipped.
pub fn smoothness(f: &[f64], g: &SparseGraph) -> Result<f64> {
    if f.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "smoothness signal length",
            expected: g.n(),
            got: f.len(),
        });
    }
    let inv_sqrt: Vec<f64> = (0..g.n())
        .map(|i| 1.0 / libm::sqrt(1.0 + g.degree(i)))
        .collect();
    let mut acc = 0.0;
    for i in 0..g.n() {
        for &(j, w) in g.neighbors(i) {
            if i == j {
                continue;
            }
            let diff = f[i] * inv_sqrt[i] - f[j] * inv_sqrt[j];
            acc += w * diff * diff;
        }
    }
    Ok(0.5 * acc)
}

/// One gradient-descent step on `|f - f0|^2 + c f^T L f` at `f0` with unit
/// learning rate: returns `(I - 2cL) f0`. At `c = 1/2` this is exactly the
/// normalized propagator applied to `f0`.
pub fn signal_recovery_step(f0: &[f64], g: &SparseGraph, c: f64) -> Result<Vec<f64>> {
    if f0.len() != g.n() {
        return Err(Error::DimensionMismatch {
            what: "signal_recovery_step signal length",
            expected: g.n(),
            got: f0.len(),
        });
    }
    let p = g.normalize_with_self_loops();
    let pf = p.mul_vec(f0);
    // (I - 2cL) f0 = (1 - 2c) f0 + 2c P f0
    Ok(f0
        .iter()
        .zip(&pf)
        .map(|(&f, &pf)| (1.0 - 2.0 * c) * f + 2.0 * c * pf)
        .collect())
}

/// Fraction of `a1`'s structural nonzeros that are also nonzero in `a2`.
/// Counted over directed positions; weights are ignored.
pub fn overlap(a1: &SparseGraph, a2: &SparseGraph) -> Result<f64> {
    if a1.n() != a2.n() {
        return Err(Error::DimensionMismatch {
            what: "overlap node count",
            expected: a1.n(),
            got: a2.n(),
        });
    }
    let total = a1.nnz();
    if total == 0 {
        return Err(Error::Empty("overlap: first graph's edge set"));
    }
    let mut common = 0usize;
    for i in 0..a1.n() {
        // both lists sorted: linear merge
        let (xs, ys) = (a1.neighbors(i), a2.neighbors(i));
        let (mut p, mut q) = (0, 0);
        while p < xs.len() && q < ys.len() {
            match xs[p].0.cmp(&ys[q].0) {
                core::cmp::Ordering::Less => p += 1,
                core::cmp::Ordering::Greater => q += 1,
                core::cmp::Ordering::Equal => {
                    common += 1;
                    p += 1;
                    q += 1;
                }
            }
        }
    }
    Ok(common as f64 / total as f64)
}

/// Sparse CSR operator produced by graph normalization. Row-addressable with
/// sorted column indices, so products have a fixed reduction order.
#[derive(Debug, Clone, PartialEq)]
pub struct Propagator {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl Propagator {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn row(&self, i: usize) -> (&[usize], &[f64]) {
        let (a, b) = (self.row_ptr[i], self.row_ptr[i + 1]);
        (&self.col_idx[a..b], &self.values[a..b])
    }

    pub fn entry(&self, i: usize, j: usize) -> f64 {
        let (cols, vals) = self.row(i);
        match cols.binary_search(&j) {
            Ok(pos) => vals[pos],
            Err(_) => 0.0,
        }
    }

    /// `P * m` for dense `m`.
    pub fn mul_dense(&self, m: &Dense) -> Dense {
        assert_eq!(self.n, m.rows(), "propagator/dense dimension mismatch");
        let cols = m.cols();
        let mut out = Dense::zeros(self.n, cols);
        for_each_row(&mut out, |i, out_row| {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                let mrow = m.row(j);
                for c in 0..cols {
                    out_row[c] += v * mrow[c];
                }
            }
        });
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.n, v.len(), "propagator/vector dimension mismatch");
        (0..self.n)
            .map(|i| {
                let (cs, vs) = self.row(i);
                cs.iter().zip(vs).fold(0.0, |acc, (&j, &val)| acc + val * v[j])
            })
            .collect()
    }

    pub fn to_dense(&self) -> Dense {
        let mut out = Dense::zeros(self.n, self.n);
        for i in 0..self.n {
            let (cs, vs) = self.row(i);
            for (&j, &v) in cs.iter().zip(vs) {
                out.set(i, j, v);
            }
        }
        out
    }
}

struct CsrBuilder {
    n: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrBuilder {
    fn new(n: usize) -> Self {
        let mut row_ptr = Vec::with_capacity(n + 1);
        row_ptr.push(0);
        CsrBuilder {
            n,
            row_ptr,
            col_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    fn push(&mut self, _row: usize, col: usize, val: f64) {
        // columns within a row must arrive sorted
        debug_assert!(
            self.col_idx.len() == *self.row_ptr.last().unwrap()
                || *self.col_idx.last().unwrap() < col
        );
        self.col_idx.push(col);
        self.values.push(val);
    }

    fn end_row(&mut self) {
        self.row_ptr.push(self.col_idx.len());
    }

    fn finish(self) -> Propagator {
        assert_eq!(self.row_ptr.len(), self.n + 1);
        Propagator {
            n: self.n,
            row_ptr: self.row_ptr,
            col_idx: self.col_idx,
            values: self.values,
        }
    }
}
