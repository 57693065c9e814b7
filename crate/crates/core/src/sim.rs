//! Feature cosine similarity, kNN feature-graph construction and sampling of
//! similar/dissimilar node pairs for the self-supervised loss.
//!
//! Similarity rows are computed one node at a time, so the full `n x n`
//! matrix is only materialized when explicitly requested. Ties are always
//! broken toward the smaller node index, which the brute-force test oracles
//! replicate.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::Dense;
use crate::{Result, SparseGraph};

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Node pairs with target similarities for the self-supervised regression
/// task: per node, its `m` most similar and `m` most dissimilar peers.
#[derive(Debug, Clone, PartialEq)]
pub struct PairSet {
    /// `(i, j, S_ij)` in sampling order.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Pairs per node per polarity.
    pub m: usize,
}

/// Rows rescaled to unit L2 norm; all-zero rows stay zero so they have
/// similarity 0 to every node.
fn normalize_rows(x: &Dense) -> Dense {
    let mut out = x.clone();
    for i in 0..out.rows() {
        let row = out.row_mut(i);
        let norm = libm::sqrt(row.iter().map(|&v| v * v).sum());
        if norm > 0.0 {
            for v in row {
                *v /= norm;
            }
        }
    }
    out
}

/// Writes similarity row `i` into `out` (`out[j] = cos(x_i, x_j)`). The
/// diagonal is exactly 1 for nonzero rows and 0 for zero rows.
fn sim_row(xn: &Dense, i: usize, out: &mut [f64]) {
    let xi = xn.row(i);
    let nonzero = xi.iter().any(|&v| v != 0.0);
    for (j, o) in out.iter_mut().enumerate() {
        *o = xn
            .row(j)
            .iter()
            .zip(xi)
            .fold(0.0, |acc, (&a, &b)| acc + a * b);
    }
    out[i] = if nonzero { 1.0 } else { 0.0 };
}

/// Full pairwise cosine-similarity matrix `S_ij = x_i . x_j / (|x_i||x_j|)`.
/// Zero-norm rows yield similarity 0 everywhere.
pub fn cosine_similarity(x: &Dense) -> Dense {
    let xn = normalize_rows(x);
    let mut out = Dense::zeros(x.rows(), x.rows());
    crate::matrix::for_each_row(&mut out, |i, row| sim_row(&xn, i, row));
    out
}

/// Indices of the `k` largest (or smallest) entries of `scores`, excluding
/// `skip`; ties prefer the smaller index. Returned in selection order
/// (best first).
fn select_extreme(scores: &[f64], skip: usize, k: usize, largest: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).filter(|&j| j != skip).collect();
    let cmp = |&a: &usize, &b: &usize| {
        let ord = if largest {
            scores[b].total_cmp(&scores[a])
        } else {
            scores[a].total_cmp(&scores[b])
        };
        ord.then(a.cmp(&b))
    };
    if k < idx.len() {
        idx.select_nth_unstable_by(k - 1, cmp);
        idx.truncate(k);
    }
    idx.sort_unstable_by(cmp);
    idx
}

/// Builds the kNN feature graph: each node points at its `k` most
/// cosine-similar peers, and the directed picks are symmetrized by union
/// into an undirected unit-weight graph.
pub fn build_knn_graph(x: &Dense, k: usize) -> Result<SparseGraph> {
    let n = x.rows();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(alloc::format!(
            "k must satisfy 1 <= k < n (k = {k}, n = {n})"
        )));
    }
    let xn = normalize_rows(x);
    let picks = map_rows(n, |i, buf| {
        sim_row(&xn, i, buf);
        select_extreme(buf, i, k, true)
    });
    let mut g = SparseGraph::new(n);
    for (i, row) in picks.iter().enumerate() {
        for &j in row {
            if !g.has_edge(i, j) {
                g.add_edge(i, j, 1.0)?;
            }
        }
    }
    Ok(g)
}

/// Samples, for every node, its `m` most similar and `m` most dissimilar
/// peers from a full similarity matrix. Selection is exhaustive and
/// deterministic; targets are the exact `S_ij` entries.
pub fn sample_pairs(s: &Dense, m: usize) -> Result<PairSet> {
    let n = s.rows();
    check_m(m, n)?;
    let mut pairs = Vec::with_capacity(2 * m * n);
    for i in 0..n {
        let row = s.row(i);
        push_row_pairs(&mut pairs, row, i, m);
    }
    Ok(PairSet { pairs, m })
}

/// Same sampling as [`sample_pairs`] but computing similarity rows from the
/// feature matrix on the fly, avoiding the dense `n x n` intermediate.
pub fn sample_pairs_from_features(x: &Dense, m: usize) -> Result<PairSet> {
    let n = x.rows();
    check_m(m, n)?;
    let xn = normalize_rows(x);
    let per_row = map_rows(n, |i, buf| {
        sim_row(&xn, i, buf);
        let mut out = Vec::with_capacity(2 * m);
        push_row_pairs(&mut out, buf, i, m);
        out
    });
    Ok(PairSet {
        pairs: per_row.into_iter().flatten().collect(),
        m,
    })
}

fn check_m(m: usize, n: usize) -> Result<()> {
    if m == 0 || m >= n {
        return Err(Error::InvalidArgument(alloc::format!(
            "m must satisfy 1 <= m < n (m = {m}, n = {n})"
        )));
    }
    Ok(())
}

fn push_row_pairs(pairs: &mut Vec<(usize, usize, f64)>, row: &[f64], i: usize, m: usize) {
    for j in select_extreme(row, i, m, true) {
        pairs.push((i, j, row[j]));
    }
    for j in select_extreme(row, i, m, false) {
        pairs.push((i, j, row[j]));
    }
}

/// Maps `f` over node indices with a scratch similarity-row buffer,
/// parallel per row when enabled.
fn map_rows<T: Send>(n: usize, f: impl Fn(usize, &mut [f64]) -> T + Sync) -> Vec<T> {
    #[cfg(feature = "parallel")]
    {
        (0..n)
            .into_par_iter()
            .map_init(|| vec![0.0; n], |buf, i| f(i, buf))
            .collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        let mut buf = vec![0.0; n];
        (0..n).map(|i| f(i, &mut buf)).collect()
    }
}
