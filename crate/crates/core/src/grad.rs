//! Exact reverse-mode gradients of the joint objective, and the
//! finite-difference verifier that keeps them honest.
//!
//! The gradients are derived by hand for the two-product factorization used
//! in the forward pass. With `U = P_orig M`, `V = P_feat M`, `M = H_in W`
//! and `Z_i = s_i U_i + (1 - s_i) V_i + gamma K_i M_i`:
//!
//! ```text
//! dM   = P_orig (s * dZ) + P_feat ((1 - s) * dZ) + gamma K * dZ
//! ds_i = dZ_i . (U_i - V_i)          dK_i = gamma (dZ_i . M_i)
//! dW   = H_in^T dM                   dH_in = dM W^T + da w_s^T + dK w_K^T
//! ```
//!
//! where `da = ds * s * (1 - s)` undoes the sigmoid and `*` scales rows.
//! Both propagators must be symmetric (they are, for symmetric graphs),
//! which the first identity relies on.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Error;
use crate::matrix::Dense;
use crate::model::{
    classification_loss, forward, ssl_loss, total_loss, DropoutMasks, ForwardTrace, ModelParams,
    Propagation,
};
use crate::optim::GradientSet;
use crate::sim::PairSet;
use crate::Result;

/// Label/mask/pair context shared by loss evaluation and backprop.
#[derive(Debug, Clone, Copy)]
pub struct LossInputs<'a> {
    pub labels: &'a [usize],
    pub train_mask: &'a [usize],
    /// Required when `params.lambda > 0`.
    pub pairs: Option<&'a PairSet>,
    /// L2 coefficient applied to the layer transforms `W` only.
    pub weight_decay: f64,
}

/// Scalar training objective: classification loss + `lambda` * SSL loss +
/// `weight_decay / 2 * sum |W|^2`. This is exactly the function whose
/// gradient [`backward`] computes, which the finite-difference check relies
/// on.
pub fn objective(
    x: &Dense,
    prop: &Propagation<'_>,
    params: &ModelParams,
    inputs: &LossInputs<'_>,
    dropout: Option<DropoutMasks>,
) -> Result<f64> {
    let trace = forward(x, prop, params, dropout)?;
    objective_from_trace(&trace, params, inputs)
}

pub fn objective_from_trace(
    trace: &ForwardTrace,
    params: &ModelParams,
    inputs: &LossInputs<'_>,
) -> Result<f64> {
    let cls = classification_loss(trace.logits(), inputs.labels, inputs.train_mask)?;
    let ssl = if params.lambda > 0.0 {
        let pairs = inputs
            .pairs
            .ok_or(Error::Empty("pair set (required when lambda > 0)"))?;
        ssl_loss(trace.hidden(), pairs, &params.ssl_head)?
    } else {
        0.0
    };
    let l2: f64 = params
        .layers
        .iter()
        .map(|l| l.w.data().iter().map(|&w| w * w).sum::<f64>())
        .sum();
    Ok(total_loss(cls, ssl, params.lambda) + 0.5 * inputs.weight_decay * l2)
}

/// Exact gradients of [`objective`] w.r.t. every trainable tensor.
pub fn backward(
    trace: &ForwardTrace,
    prop: &Propagation<'_>,
    params: &ModelParams,
    inputs: &LossInputs<'_>,
) -> Result<GradientSet> {
    if trace.layers.len() != params.layers.len() {
        return Err(Error::DimensionMismatch {
            what: "trace layer count",
            expected: params.layers.len(),
            got: trace.layers.len(),
        });
    }
    let num_layers = params.layers.len();
    let mut grads = GradientSet::zeros_like(params);

    // classification loss -> gradient on the final pre-activation
    let logits = trace.logits();
    let n = logits.rows();
    let c = logits.cols();
    if inputs.train_mask.is_empty() {
        return Err(Error::Empty("classification mask"));
    }
    let mut d_out = Dense::zeros(n, c);
    let inv_mask = 1.0 / inputs.train_mask.len() as f64;
    for &i in inputs.train_mask {
        if i >= n {
            return Err(Error::IndexOutOfRange { index: i, n });
        }
        let y = inputs.labels[i];
        if y >= c {
            return Err(Error::LabelOutOfRange {
                label: y,
                num_classes: c,
            });
        }
        let row = logits.row(i);
        let max = row.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v));
        let denom: f64 = row.iter().map(|&v| libm::exp(v - max)).sum();
        let out = d_out.row_mut(i);
        for (j, &v) in row.iter().enumerate() {
            out[j] = (libm::exp(v - max) / denom - if j == y { 1.0 } else { 0.0 }) * inv_mask;
        }
    }

    // SSL loss -> gradient on the first layer's activated output, plus head
    // gradients. With lambda = 0 the head gradients are exactly zero.
    let h1 = trace.hidden();
    let mut d_ssl: Option<Dense> = None;
    if params.lambda > 0.0 {
        let pairs = inputs
            .pairs
            .ok_or(Error::Empty("pair set (required when lambda > 0)"))?;
        if pairs.pairs.is_empty() {
            return Err(Error::Empty("sampled pair set"));
        }
        let head = &params.ssl_head;
        let coef = 2.0 * params.lambda / pairs.pairs.len() as f64;
        let mut dh = Dense::zeros(h1.rows(), h1.cols());
        for &(i, j, target) in &pairs.pairs {
            let (ri, rj) = (h1.row(i), h1.row(j));
            let pred: f64 = ri
                .iter()
                .zip(rj)
                .zip(&head.w)
                .fold(head.b, |acc, ((&a, &b), &w)| acc + (a - b) * w);
            let e = coef * (pred - target);
            for ((gw, &a), &b) in grads.ssl_w.iter_mut().zip(ri).zip(rj) {
                *gw += e * (a - b);
            }
            grads.ssl_b += e;
            for (d, &w) in dh.row_mut(i).iter_mut().zip(&head.w) {
                *d += e * w;
            }
            for (d, &w) in dh.row_mut(j).iter_mut().zip(&head.w) {
                *d -= e * w;
            }
        }
        d_ssl = Some(dh);
    }

    // walk layers back to front; d_out holds dL/dZ of the current layer
    for l in (0..num_layers).rev() {
        let tr = &trace.layers[l];
        let lp = &params.layers[l];
        let gl = &mut grads.layers[l];
        let dz = d_out;

        let (d_m, d_gate): (Dense, Option<Dense>) = match (prop, &tr.v) {
            (Propagation::Adaptive { orig, feat }, Some(v)) => {
                let mut scaled_s = dz.clone();
                scaled_s.scale_rows(&tr.s);
                let ones_minus: Vec<f64> = tr.s.iter().map(|&s| 1.0 - s).collect();
                let mut scaled_f = dz.clone();
                scaled_f.scale_rows(&ones_minus);
                let mut d_m = orig.mul_dense(&scaled_s);
                d_m.add_scaled(1.0, &feat.mul_dense(&scaled_f));
                let gk: Vec<f64> = tr.k.iter().map(|&k| params.gamma * k).collect();
                let mut scaled_k = dz.clone();
                scaled_k.scale_rows(&gk);
                d_m.add_scaled(1.0, &scaled_k);

                // gate and self-loop gradients
                let mut ds = vec![0.0; tr.s.len()];
                let mut dk = vec![0.0; tr.k.len()];
                for i in 0..dz.rows() {
                    let (dzr, ur, vr, mr) = (dz.row(i), tr.u.row(i), v.row(i), tr.m.row(i));
                    let mut acc_s = 0.0;
                    let mut acc_k = 0.0;
                    for c in 0..dz.cols() {
                        acc_s += dzr[c] * (ur[c] - vr[c]);
                        acc_k += dzr[c] * mr[c];
                    }
                    ds[i] = acc_s;
                    dk[i] = params.gamma * acc_k;
                }
                let da: Vec<f64> = ds
                    .iter()
                    .zip(&tr.s)
                    .map(|(&d, &s)| d * s * (1.0 - s))
                    .collect();
                gl.w_s = tr.hin.transpose_matvec(&da);
                gl.b_s = da.iter().sum();
                gl.w_k = tr.hin.transpose_matvec(&dk);
                gl.b_k = dk.iter().sum();

                let mut d_gate = Dense::zeros(tr.hin.rows(), tr.hin.cols());
                d_gate.add_outer(&da, &lp.w_s);
                d_gate.add_outer(&dk, &lp.w_k);
                (d_m, Some(d_gate))
            }
            (Propagation::Fixed(p), None) => (p.mul_dense(&dz), None),
            _ => {
                return Err(Error::InvalidArgument(alloc::format!(
                    "trace was produced under a different propagation mode (layer {l})"
                )))
            }
        };

        gl.w = tr.hin.transpose_matmul(&d_m);
        if inputs.weight_decay != 0.0 {
            gl.w.add_scaled(inputs.weight_decay, &lp.w);
        }

        if l == 0 {
            break;
        }
        let mut d_hin = d_m.matmul_transpose(&lp.w);
        if let Some(g) = d_gate {
            d_hin.add_scaled(1.0, &g);
        }
        // undo dropout on this layer's input
        if let Some(masks) = &trace.dropout {
            d_hin = d_hin.hadamard(&masks.masks[l]);
        }
        // SSL attaches to the first layer's activated output
        if l == 1 {
            if let Some(dh) = &d_ssl {
                d_hin.add_scaled(1.0, dh);
            }
        }
        // ReLU of the previous layer
        let z_prev = &trace.layers[l - 1].z;
        let mut next = d_hin;
        for (g, &z) in next.data_mut().iter_mut().zip(z_prev.data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        d_out = next;
    }
    Ok(grads)
}

/// Central finite-difference gradient of [`objective`] over the flat
/// parameter vector. Dropout must be disabled (it is: no masks are passed).
pub fn finite_diff_gradients(
    x: &Dense,
    prop: &Propagation<'_>,
    params: &ModelParams,
    inputs: &LossInputs<'_>,
    h: f64,
) -> Result<Vec<f64>> {
    let mut probe = params.clone();
    let flat = params.flatten();
    let mut out = Vec::with_capacity(flat.len());
    for idx in 0..flat.len() {
        let mut bumped = flat.clone();
        bumped[idx] = flat[idx] + h;
        probe.assign_from_flat(&bumped);
        let up = objective(x, prop, &probe, inputs, None)?;
        bumped[idx] = flat[idx] - h;
        probe.assign_from_flat(&bumped);
        let down = objective(x, prop, &probe, inputs, None)?;
        out.push((up - down) / (2.0 * h));
    }
    Ok(out)
}

/// Outcome of comparing analytic gradients against central differences.
#[derive(Debug, Clone, PartialEq)]
pub struct FiniteDiffReport {
    pub max_rel_err: f64,
    pub worst_index: usize,
    pub num_params: usize,
}

impl FiniteDiffReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.max_rel_err < tol
    }
}

/// Perturbs every parameter coordinate and compares against [`backward`].
/// The relative error denominator is clamped below at 1e-6 so that
/// coordinates with genuinely zero gradient compare absolutely.
pub fn finite_diff_check(
    x: &Dense,
    prop: &Propagation<'_>,
    params: &ModelParams,
    inputs: &LossInputs<'_>,
    h: f64,
) -> Result<FiniteDiffReport> {
    let trace = forward(x, prop, params, None)?;
    let analytic = backward(&trace, prop, params, inputs)?.flatten();
    let numeric = finite_diff_gradients(x, prop, params, inputs, h)?;
    let mut max_rel_err = 0.0;
    let mut worst_index = 0;
    for (idx, (&a, &fd)) in analytic.iter().zip(&numeric).enumerate() {
        let denom = libm::fabs(a).max(libm::fabs(fd)).max(1e-6);
        let rel = libm::fabs(a - fd) / denom;
        if rel > max_rel_err {
            max_rel_err = rel;
            worst_index = idx;
        }
    }
    Ok(FiniteDiffReport {
        max_rel_err,
        worst_index,
        num_params: analytic.len(),
    })
}
