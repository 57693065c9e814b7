//! Gradient container, flat parameter views and the Adam update.
//!
//! Parameters and gradients flatten to a single `Vec<f64>` in a fixed layout
//! (per layer: `W` row-major, `W_s`, `b_s`, `W_K`, `b_K`; then the SSL head).
//! Adam state and the finite-difference checker both work on this flat view.

use alloc::vec;
use alloc::vec::Vec;

use crate::matrix::Dense;
use crate::model::ModelParams;

/// Gradients for one layer; shapes mirror [`LayerParams`].
#[derive(Debug, Clone, PartialEq)]
pub struct LayerGrads {
    pub w: Dense,
    pub w_s: Vec<f64>,
    pub b_s: f64,
    pub w_k: Vec<f64>,
    pub b_k: f64,
}

/// Gradients of the joint objective w.r.t. every trainable tensor.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientSet {
    pub layers: Vec<LayerGrads>,
    pub ssl_w: Vec<f64>,
    pub ssl_b: f64,
}

impl GradientSet {
    pub fn zeros_like(params: &ModelParams) -> Self {
        GradientSet {
            layers: params
                .layers
                .iter()
                .map(|l| LayerGrads {
                    w: Dense::zeros(l.w.rows(), l.w.cols()),
                    w_s: vec![0.0; l.w_s.len()],
                    b_s: 0.0,
                    w_k: vec![0.0; l.w_k.len()],
                    b_k: 0.0,
                })
                .collect(),
            ssl_w: vec![0.0; params.ssl_head.w.len()],
            ssl_b: 0.0,
        }
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for l in &self.layers {
            out.extend_from_slice(l.w.data());
            out.extend_from_slice(&l.w_s);
            out.push(l.b_s);
            out.extend_from_slice(&l.w_k);
            out.push(l.b_k);
        }
        out.extend_from_slice(&self.ssl_w);
        out.push(self.ssl_b);
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.flatten()
            .iter()
            .fold(0.0f64, |m, &g| m.max(libm::fabs(g)))
    }
}

impl ModelParams {
    /// Total number of trainable scalars.
    pub fn num_params(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.w.data().len() + l.w_s.len() + l.w_k.len() + 2)
            .sum::<usize>()
            + self.ssl_head.w.len()
            + 1
    }

    pub fn flatten(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.num_params());
        for l in &self.layers {
            out.extend_from_slice(l.w.data());
            out.extend_from_slice(&l.w_s);
            out.push(l.b_s);
            out.extend_from_slice(&l.w_k);
            out.push(l.b_k);
        }
        out.extend_from_slice(&self.ssl_head.w);
        out.push(self.ssl_head.b);
        out
    }

    /// Writes a flat vector (same layout as [`ModelParams::flatten`]) back
    /// into the structured tensors.
    pub fn assign_from_flat(&mut self, flat: &[f64]) {
        assert_eq!(flat.len(), self.num_params(), "flat parameter length");
        let mut pos = 0;
        let mut take = |n: usize| {
            let s = &flat[pos..pos + n];
            pos += n;
            s
        };
        for l in &mut self.layers {
            let wlen = l.w.data().len();
            l.w.data_mut().copy_from_slice(take(wlen));
            let ns = l.w_s.len();
            l.w_s.copy_from_slice(take(ns));
            l.b_s = take(1)[0];
            let nk = l.w_k.len();
            l.w_k.copy_from_slice(take(nk));
            l.b_k = take(1)[0];
        }
        let nw = self.ssl_head.w.len();
        self.ssl_head.w.copy_from_slice(take(nw));
        self.ssl_head.b = take(1)[0];
        assert_eq!(pos, flat.len());
    }
}

/// First/second moment estimates plus the step counter.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState {
    pub m: Vec<f64>,
    pub v: Vec<f64>,
    pub t: u64,
}

impl AdamState {
    pub fn new(num_params: usize) -> Self {
        AdamState {
            m: vec![0.0; num_params],
            v: vec![0.0; num_params],
            t: 0,
        }
    }
}

/// One bias-corrected Adam step over flat parameter/gradient views.
pub fn adam_step(
    params: &mut [f64],
    grads: &[f64],
    state: &mut AdamState,
    lr: f64,
    beta1: f64,
    beta2: f64,
    eps: f64,
) {
    assert_eq!(params.len(), grads.len());
    assert_eq!(params.len(), state.m.len());
    state.t += 1;
    let bc1 = 1.0 - libm::pow(beta1, state.t as f64);
    let bc2 = 1.0 - libm::pow(beta2, state.t as f64);
    for i in 0..params.len() {
        let g = grads[i];
        state.m[i] = beta1 * state.m[i] + (1.0 - beta1) * g;
        state.v[i] = beta2 * state.v[i] + (1.0 - beta2) * g * g;
        let m_hat = state.m[i] / bc1;
        let v_hat = state.v[i] / bc2;
        params[i] -= lr * m_hat / (libm::sqrt(v_hat) + eps);
    }
}

/// Default Adam hyperparameters.
pub const ADAM_BETA1: f64 = 0.9;
pub const ADAM_BETA2: f64 = 0.999;
pub const ADAM_EPS: f64 = 1e-8;

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerParams, SslHead};

    fn tiny_params() -> ModelParams {
        ModelParams {
            layers: vec![
                LayerParams {
                    w: Dense::from_rows(&[&[1.0, 2.0], &[3.0, 4.0]]),
                    w_s: vec![0.1, 0.2],
                    b_s: 0.3,
                    w_k: vec![0.4, 0.5],
                    b_k: 0.6,
                },
                LayerParams {
                    w: Dense::from_rows(&[&[5.0], &[6.0]]),
                    w_s: vec![0.7, 0.8],
                    b_s: 0.9,
                    w_k: vec![1.0, 1.1],
                    b_k: 1.2,
                },
            ],
            ssl_head: SslHead {
                w: vec![1.3, 1.4],
                b: 1.5,
            },
            gamma: 0.1,
            lambda: 1.0,
        }
    }

    #[test]
    fn flatten_roundtrip() {
        let p = tiny_params();
        let flat = p.flatten();
        assert_eq!(flat.len(), p.num_params());
        let mut q = p.clone();
        for v in q.flatten() {
            assert!(v.is_finite());
        }
        q.assign_from_flat(&flat);
        assert_eq!(p, q);
    }

    #[test]
    fn zero_gradient_leaves_params_fixed() {
        let mut params = vec![1.0, -2.0, 3.0];
        let mut state = AdamState::new(3);
        adam_step(&mut params, &[0.0; 3], &mut state, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        assert_eq!(params, vec![1.0, -2.0, 3.0]);
        assert_eq!(state.t, 1);
    }

    #[test]
    fn first_step_is_signed_learning_rate() {
        // with bias correction, the first update is lr * g / (|g| + eps')
        let mut params = vec![0.0];
        let mut state = AdamState::new(1);
        let g = 0.37;
        adam_step(&mut params, &[g], &mut state, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
        // hand trace: m_hat = g, v_hat = g^2, step = lr * g / (|g| + eps)
        let want = -0.01 * g / (g.abs() + ADAM_EPS);
        assert!((params[0] - want).abs() < 1e-15);
    }

    #[test]
    fn constant_gradient_step_size_approaches_lr() {
        let mut params = vec![0.0];
        let mut state = AdamState::new(1);
        let mut prev = 0.0;
        let mut last_step = 0.0;
        for _ in 0..5000 {
            adam_step(&mut params, &[2.5], &mut state, 0.01, ADAM_BETA1, ADAM_BETA2, ADAM_EPS);
            last_step = prev - params[0];
            prev = params[0];
        }
        assert!((last_step - 0.01).abs() < 1e-6, "step {last_step}");
    }
}
