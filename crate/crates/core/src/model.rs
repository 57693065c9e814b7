//! The two-layer similarity-preserving graph convolution model.
//!
//! Per layer, a per-node score gate `s = sigmoid(H W_s + b_s)` mixes the
//! normalized original graph with the normalized feature graph row-wise, and
//! a learned per-node self-loop strength `K = H W_K + b_K` is added to the
//! diagonal, scaled by `gamma`:
//!
//! ```text
//! P~ = s * P_orig + (1 - s) * P_feat + gamma * diag(K)
//! H' = act(P~ H W)
//! ```
//!
//! The assembled propagator is never materialized at full size; the forward
//! pass keeps the two sparse products `P_orig (H W)` and `P_feat (H W)`
//! (also reused by the backward pass).

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::Dense;
use crate::sim::PairSet;
use crate::{Propagator, Result};

/// Trainable tensors of one layer: the transform `W`, the score gate
/// `(W_s, b_s)` and the self-loop head `(W_K, b_K)`.
#[derive(Debug, Clone, PartialEq)]
pub struct LayerParams {
    pub w: Dense,
    pub w_s: Vec<f64>,
    pub b_s: f64,
    pub w_k: Vec<f64>,
    pub b_k: f64,
}

/// Affine head mapping a hidden-representation difference to a scalar
/// similarity prediction.
#[derive(Debug, Clone, PartialEq)]
pub struct SslHead {
    pub w: Vec<f64>,
    pub b: f64,
}

/// All trainable tensors plus the two fixed mixing hyperparameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub layers: Vec<LayerParams>,
    pub ssl_head: SslHead,
    /// Self-loop contribution weight.
    pub gamma: f64,
    /// Self-supervised loss weight.
    pub lambda: f64,
}

impl ModelParams {
    /// Layer widths `d_in -> hidden -> ... -> num_classes`.
    pub fn widths(&self) -> Vec<usize> {
        let mut ws: Vec<usize> = self.layers.iter().map(|l| l.w.rows()).collect();
        if let Some(last) = self.layers.last() {
            ws.push(last.w.cols());
        }
        ws
    }
}

/// How the propagation matrix is built.
///
/// `Fixed` runs the same code path with `s = 1` and `gamma = 0`, i.e. a
/// plain graph convolution on the given operator; the score and self-loop
/// parameters then receive zero gradient.
#[derive(Debug, Clone, Copy)]
pub enum Propagation<'a> {
    Fixed(&'a Propagator),
    Adaptive {
        orig: &'a Propagator,
        feat: &'a Propagator,
    },
}

impl<'a> Propagation<'a> {
    pub fn n(&self) -> usize {
        match self {
            Propagation::Fixed(p) => p.n(),
            Propagation::Adaptive { orig, .. } => orig.n(),
        }
    }

    pub fn is_adaptive(&self) -> bool {
        matches!(self, Propagation::Adaptive { .. })
    }
}

/// Inverted-dropout masks (entries 0 or `1/keep`), one per layer input.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks {
    pub masks: Vec<Dense>,
}

/// Everything the backward pass needs from one layer's forward evaluation.
#[derive(Debug, Clone)]
pub struct LayerTrace {
    /// Post-dropout layer input.
    pub hin: Dense,
    /// Score gate `s` (all ones in fixed mode).
    pub s: Vec<f64>,
    /// Self-loop values `K` (all zeros in fixed mode).
    pub k: Vec<f64>,
    /// `hin W`.
    pub m: Dense,
    /// `P_orig m`.
    pub u: Dense,
    /// `P_feat m` (adaptive mode only).
    pub v: Option<Dense>,
    /// Pre-activation output.
    pub z: Dense,
    /// Activated output (equals `z` for the last layer).
    pub h: Dense,
}

/// Forward-pass record: per-layer traces plus the dropout masks in effect.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    pub layers: Vec<LayerTrace>,
    pub dropout: Option<DropoutMasks>,
}

impl ForwardTrace {
    /// Final-layer raw logits.
    pub fn logits(&self) -> &Dense {
        &self.layers.last().expect("trace has layers").z
    }

    /// First-layer activated hidden representation (pre-dropout), the input
    /// to the self-supervised head.
    pub fn hidden(&self) -> &Dense {
        &self.layers[0].h
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// `s = sigmoid(h_prev W_s + b_s)`, one gate per node.
pub fn score_vector(h_prev: &Dense, lp: &LayerParams) -> Result<Vec<f64>> {
    if h_prev.cols() != lp.w_s.len() {
        return Err(Error::DimensionMismatch {
            what: "score_vector input width",
            expected: lp.w_s.len(),
            got: h_prev.cols(),
        });
    }
    Ok(h_prev
        .matvec(&lp.w_s)
        .into_iter()
        .map(|a| sigmoid(a + lp.b_s))
        .collect())
}

/// `K_i = h_prev_i W_K + b_K`, linear with no activation.
pub fn selfloop_values(h_prev: &Dense, lp: &LayerParams) -> Result<Vec<f64>> {
    if h_prev.cols() != lp.w_k.len() {
        return Err(Error::DimensionMismatch {
            what: "selfloop_values input width",
            expected: lp.w_k.len(),
            got: h_prev.cols(),
        });
    }
    Ok(h_prev
        .matvec(&lp.w_k)
        .into_iter()
        .map(|a| a + lp.b_k)
        .collect())
}

/// Materializes `P~ = s * P_orig + (1 - s) * P_feat + gamma diag(K)` as a
/// dense matrix. Intended for small graphs and tests; the forward pass uses
/// the factored form.
pub fn assemble_propagator(
    s: &[f64],
    p_orig: &Propagator,
    p_feat: &Propagator,
    k: &[f64],
    gamma: f64,
) -> Result<Dense> {
    let n = p_orig.n();
    for (len, what) in [
        (p_feat.n(), "assemble_propagator feature graph"),
        (s.len(), "assemble_propagator score vector"),
        (k.len(), "assemble_propagator self-loop vector"),
    ] {
        if len != n {
            return Err(Error::DimensionMismatch {
                what,
                expected: n,
                got: len,
            });
        }
    }
    let mut out = Dense::zeros(n, n);
    for i in 0..n {
        let row = out.row_mut(i);
        let (cs, vs) = p_orig.row(i);
        for (&j, &v) in cs.iter().zip(vs) {
            row[j] += s[i] * v;
        }
        let (cs, vs) = p_feat.row(i);
        for (&j, &v) in cs.iter().zip(vs) {
            row[j] += (1.0 - s[i]) * v;
        }
        row[i] += gamma * k[i];
    }
    Ok(out)
}

/// Combines the cached products into the pre-activation output:
/// `z_i = s_i u_i + (1 - s_i) v_i + gamma K_i m_i` (row-wise).
fn combine(s: &[f64], k: &[f64], gamma: f64, u: &Dense, v: &Dense, m: &Dense) -> Dense {
    let mut z = Dense::zeros(u.rows(), u.cols());
    for i in 0..u.rows() {
        let (si, ki) = (s[i], k[i]);
        let (ur, vr, mr) = (u.row(i), v.row(i), m.row(i));
        for (c, out) in z.row_mut(i).iter_mut().enumerate() {
            *out = si * ur[c] + (1.0 - si) * vr[c] + gamma * ki * mr[c];
        }
    }
    z
}

/// Full forward pass. ReLU after every layer except the last, which emits
/// raw logits. `dropout` masks (training mode only) apply to each layer's
/// input; the gate and self-loop heads read the same post-dropout tensor
/// that feeds the layer transform.
pub fn forward(
    x: &Dense,
    prop: &Propagation<'_>,
    params: &ModelParams,
    dropout: Option<DropoutMasks>,
) -> Result<ForwardTrace> {
    let n = x.rows();
    if prop.n() != n {
        return Err(Error::DimensionMismatch {
            what: "forward node count",
            expected: prop.n(),
            got: n,
        });
    }
    if params.layers.is_empty() {
        return Err(Error::Empty("model layers"));
    }
    if let Some(d) = &dropout {
        if d.masks.len() != params.layers.len() {
            return Err(Error::DimensionMismatch {
                what: "dropout mask count",
                expected: params.layers.len(),
                got: d.masks.len(),
            });
        }
    }
    let num_layers = params.layers.len();
    let mut layers = Vec::with_capacity(num_layers);
    let mut h = x.clone();
    for (l, lp) in params.layers.iter().enumerate() {
        if h.cols() != lp.w.rows() {
            return Err(Error::DimensionMismatch {
                what: "layer input width",
                expected: lp.w.rows(),
                got: h.cols(),
            });
        }
        let hin = match &dropout {
            Some(d) => h.hadamard(&d.masks[l]),
            None => h,
        };
        let (s, k, m, u, v, z) = match prop {
            Propagation::Fixed(p) => {
                let m = hin.matmul(&lp.w);
                let u = p.mul_dense(&m);
                let z = u.clone();
                (vec![1.0; n], vec![0.0; n], m, u, None, z)
            }
            Propagation::Adaptive { orig, feat } => {
                let s = score_vector(&hin, lp)?;
                let k = selfloop_values(&hin, lp)?;
                let m = hin.matmul(&lp.w);
                let u = orig.mul_dense(&m);
                let v = feat.mul_dense(&m);
                let z = combine(&s, &k, params.gamma, &u, &v, &m);
                (s, k, m, u, Some(v), z)
            }
        };
        let last = l + 1 == num_layers;
        let hout = if last { z.clone() } else { z.map(|x| x.max(0.0)) };
        h = hout.clone();
        layers.push(LayerTrace {
            hin,
            s,
            k,
            m,
            u,
            v,
            z,
            h: hout,
        });
    }
    Ok(ForwardTrace {
        layers,
        dropout,
    })
}

/// Mean cross-entropy of `softmax(logits)` against integer labels over the
/// masked nodes, with a numerically stable log-sum-exp.
pub fn classification_loss(logits: &Dense, labels: &[usize], mask: &[usize]) -> Result<f64> {
    if mask.is_empty() {
        return Err(Error::Empty("classification mask"));
    }
    if labels.len() != logits.rows() {
        return Err(Error::DimensionMismatch {
            what: "label vector length",
            expected: logits.rows(),
            got: labels.len(),
        });
    }
    let c = logits.cols();
    let mut acc = 0.0;
    for &i in mask {
        if i >= logits.rows() {
            return Err(Error::IndexOutOfRange {
                index: i,
                n: logits.rows(),
            });
        }
        let y = labels[i];
        if y >= c {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: c,
            });
        }
        let row = logits.row(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let lse = max + libm::log(row.iter().map(|&v| libm::exp(v - max)).sum());
        acc += lse - row[y];
    }
    Ok(acc / mask.len() as f64)
}

/// Self-supervised loss: mean squared error between the affine head applied
/// to first-layer hidden differences and the sampled similarity targets.
pub fn ssl_loss(h1: &Dense, pairs: &PairSet, head: &SslHead) -> Result<f64> {
    if pairs.pairs.is_empty() {
        return Err(Error::Empty("sampled pair set"));
    }
    if head.w.len() != h1.cols() {
        return Err(Error::DimensionMismatch {
            what: "ssl head width",
            expected: h1.cols(),
            got: head.w.len(),
        });
    }
    let mut acc = 0.0;
    for &(i, j, target) in &pairs.pairs {
        if i >= h1.rows() || j >= h1.rows() {
            return Err(Error::IndexOutOfRange {
                index: i.max(j),
                n: h1.rows(),
            });
        }
        let pred: f64 = h1
            .row(i)
            .iter()
            .zip(h1.row(j))
            .zip(&head.w)
            .fold(head.b, |acc, ((&a, &b), &w)| acc + (a - b) * w);
        let e = pred - target;
        acc += e * e;
    }
    Ok(acc / pairs.pairs.len() as f64)
}

/// Joint objective `cls + lambda * ssl`.
pub fn total_loss(cls: f64, ssl: f64, lambda: f64) -> f64 {
    cls + lambda * ssl
}

/// Fraction of masked nodes whose argmax logit matches the label (argmax
/// ties go to the smaller class index).
pub fn accuracy(logits: &Dense, labels: &[usize], mask: &[usize]) -> f64 {
    if mask.is_empty() {
        return 0.0;
    }
    let correct = mask
        .iter()
        .filter(|&&i| {
            let row = logits.row(i);
            let mut best = 0;
            for (c, &v) in row.iter().enumerate().skip(1) {
                if v > row[best] {
                    best = c;
                }
            }
            best == labels[i]
        })
        .count();
    correct as f64 / mask.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::SparseGraph;

    fn layer(d_in: usize, d_out: usize) -> LayerParams {
        LayerParams {
            w: Dense::zeros(d_in, d_out),
            w_s: vec![0.0; d_in],
            b_s: 0.0,
            w_k: vec![0.0; d_in],
            b_k: 0.0,
        }
    }

    #[test]
    fn score_vector_examples() {
        let h = Dense::from_rows(&[&[1.0, 2.0], &[0.0, 0.0]]);
        let mut lp = layer(2, 3);
        let s = score_vector(&h, &lp).unwrap();
        assert_eq!(s, vec![0.5, 0.5]);
        lp.b_s = 2.0;
        let s = score_vector(&h, &lp).unwrap();
        let want = 1.0 / (1.0 + (-2.0f64).exp());
        assert!((s[0] - want).abs() < 1e-12);
        assert!((want - 0.8808).abs() < 1e-4);
        // zero input row falls back to sigmoid(b_s)
        assert_eq!(s[1], want);
    }

    #[test]
    fn selfloop_values_examples() {
        let h = Dense::from_rows(&[&[2.0]]);
        let mut lp = layer(1, 1);
        assert_eq!(selfloop_values(&h, &lp).unwrap(), vec![0.0]);
        lp.b_k = 1.0;
        assert_eq!(selfloop_values(&h, &lp).unwrap(), vec![1.0]);
        lp.w_k = vec![0.5];
        lp.b_k = -1.0;
        assert_eq!(selfloop_values(&h, &lp).unwrap(), vec![0.0]);
    }

    #[test]
    fn assemble_propagator_limits_and_hand_case() {
        let g = SparseGraph::from_edges(2, &[(0, 1)]).unwrap();
        let p_orig = g.normalize_with_self_loops(); // all entries 0.5
        let p_feat = g.normalize_plain(); // antidiagonal 1
        let ones = vec![1.0, 1.0];
        let zeros = vec![0.0, 0.0];
        let a = assemble_propagator(&ones, &p_orig, &p_feat, &zeros, 0.0).unwrap();
        assert_eq!(a.max_abs_diff(&p_orig.to_dense()), 0.0);
        let b = assemble_propagator(&zeros, &p_orig, &p_feat, &zeros, 0.0).unwrap();
        assert_eq!(b.max_abs_diff(&p_feat.to_dense()), 0.0);
        let c = assemble_propagator(&[0.5, 0.5], &p_orig, &p_feat, &ones, 0.1).unwrap();
        let want = Dense::from_rows(&[&[0.35, 0.75], &[0.75, 0.35]]);
        assert!(c.max_abs_diff(&want) < 1e-15);
    }

    #[test]
    fn classification_loss_examples() {
        // confident correct prediction drives the loss to zero
        let logits = Dense::from_rows(&[&[50.0, 0.0]]);
        assert!(classification_loss(&logits, &[0], &[0]).unwrap() < 1e-15);
        // uniform logits give ln C
        let logits = Dense::from_rows(&[&[0.0, 0.0, 0.0]]);
        let loss = classification_loss(&logits, &[1], &[0]).unwrap();
        assert!((loss - 3.0f64.ln()).abs() < 1e-12);
        // hand softmax evaluation
        let logits = Dense::from_rows(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let loss = classification_loss(&logits, &[0, 1], &[0, 1]).unwrap();
        let want = -( (1.0f64.exp()) / (1.0f64.exp() + 1.0) ).ln();
        assert!((loss - want).abs() < 1e-12);
        assert!((want - 0.3133).abs() < 1e-4);
        // error paths
        assert!(classification_loss(&logits, &[0, 1], &[]).is_err());
        assert!(classification_loss(&logits, &[0, 5], &[1]).is_err());
    }

    #[test]
    fn ssl_loss_examples() {
        let h1 = Dense::from_rows(&[&[1.0, 2.0], &[0.0, 0.0]]);
        let head0 = SslHead { w: vec![0.0, 0.0], b: 0.0 };
        let pairs = PairSet {
            pairs: vec![(0, 1, 0.0); 4],
            m: 2,
        };
        assert_eq!(ssl_loss(&h1, &pairs, &head0).unwrap(), 0.0);
        let head1 = SslHead { w: vec![0.0, 0.0], b: 1.0 };
        assert_eq!(ssl_loss(&h1, &pairs, &head1).unwrap(), 1.0);
        let head = SslHead { w: vec![0.5, 0.25], b: 0.0 };
        let single = PairSet {
            pairs: vec![(0, 1, 0.5)],
            m: 1,
        };
        assert!((ssl_loss(&h1, &single, &head).unwrap() - 0.25).abs() < 1e-15);
        let empty = PairSet { pairs: vec![], m: 1 };
        assert!(ssl_loss(&h1, &empty, &head).is_err());
    }

    #[test]
    fn total_loss_examples() {
        assert_eq!(total_loss(0.7, 123.0, 0.0), 0.7);
        assert_eq!(total_loss(0.5, 0.1, 10.0), 1.5);
        assert_eq!(total_loss(0.5, 0.1, 100.0), 10.5);
    }

    #[test]
    fn forward_zero_first_layer() {
        // all-zero W^(1) zeroes the hidden layer, so the second layer's gate
        // saturates at sigmoid(b_s)
        let g = SparseGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = g.normalize_with_self_loops();
        let pf = g.normalize_plain();
        let x = Dense::from_rows(&[&[1.0, 0.0], &[0.0, 1.0], &[1.0, 1.0]]);
        let mut params = ModelParams {
            layers: vec![layer(2, 2), layer(2, 2)],
            ssl_head: SslHead { w: vec![0.0, 0.0], b: 0.0 },
            gamma: 0.1,
            lambda: 1.0,
        };
        params.layers[1].b_s = 2.0;
        let prop = Propagation::Adaptive { orig: &p, feat: &pf };
        let trace = forward(&x, &prop, &params, None).unwrap();
        assert!(trace.hidden().data().iter().all(|&v| v == 0.0));
        let want = 1.0 / (1.0 + (-2.0f64).exp());
        for &s in &trace.layers[1].s {
            assert!((s - want).abs() < 1e-12);
        }
    }

    #[test]
    fn forward_matches_dense_oracle_on_path_graph() {
        // 3-node path, small integer weights, dense hand-rolled evaluation
        let g = SparseGraph::from_edges(3, &[(0, 1), (1, 2)]).unwrap();
        let p = g.normalize_with_self_loops();
        let pf = g.normalize_plain();
        let x = Dense::from_rows(&[&[1.0, 2.0], &[0.0, 1.0], &[2.0, 0.0]]);
        let mut params = ModelParams {
            layers: vec![layer(2, 2), layer(2, 2)],
            ssl_head: SslHead { w: vec![0.0, 0.0], b: 0.0 },
            gamma: 0.1,
            lambda: 0.0,
        };
        params.layers[0].w = Dense::from_rows(&[&[1.0, -1.0], &[2.0, 1.0]]);
        params.layers[0].w_s = vec![0.5, -0.25];
        params.layers[0].w_k = vec![1.0, 0.0];
        params.layers[0].b_s = 1.0;
        params.layers[0].b_k = -0.5;
        params.layers[1].w = Dense::from_rows(&[&[1.0, 2.0], &[-1.0, 0.5]]);
        params.layers[1].w_s = vec![0.25, 0.5];
        params.layers[1].w_k = vec![0.0, 1.0];
        let prop = Propagation::Adaptive { orig: &p, feat: &pf };
        let trace = forward(&x, &prop, &params, None).unwrap();

        // dense reference: materialize P~ per layer and multiply out
        let s1 = score_vector(&x, &params.layers[0]).unwrap();
        let k1 = selfloop_values(&x, &params.layers[0]).unwrap();
        let pt1 = assemble_propagator(&s1, &p, &pf, &k1, params.gamma).unwrap();
        let h1 = pt1.matmul(&x.matmul(&params.layers[0].w)).map(|v| v.max(0.0));
        let s2 = score_vector(&h1, &params.layers[1]).unwrap();
        let k2 = selfloop_values(&h1, &params.layers[1]).unwrap();
        let pt2 = assemble_propagator(&s2, &p, &pf, &k2, params.gamma).unwrap();
        let logits = pt2.matmul(&h1.matmul(&params.layers[1].w));
        assert!(trace.hidden().max_abs_diff(&h1) < 1e-12);
        assert!(trace.logits().max_abs_diff(&logits) < 1e-12);
    }
}
