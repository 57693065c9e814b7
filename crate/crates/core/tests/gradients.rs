//! Finite-difference verification of the analytic gradients, plus the
//! reduction of the fixed-propagation path to an independently coded plain
//! graph-convolution backward pass.

use simp_gcn_core::grad::{backward, finite_diff_check, finite_diff_gradients, LossInputs};
use simp_gcn_core::model::{forward, ModelParams, Propagation, SslHead};
use simp_gcn_core::rng::Rng;
use simp_gcn_core::sim::sample_pairs_from_features;
use simp_gcn_core::train::{init_params, random_instance};
use simp_gcn_core::{Dense, SparseGraph};

const FD_H: f64 = 1e-5;
const FD_TOL: f64 = 1e-4;

struct Instance {
    x: Dense,
    graph: SparseGraph,
    labels: Vec<usize>,
    params: ModelParams,
}

fn instance(seed: u64, n: usize, d: usize, hidden: usize, c: usize, lambda: f64) -> Instance {
    let (x, graph, labels) = random_instance(seed, n, d, c, 0.5);
    let mut rng = Rng::new(seed ^ 0xABCD);
    let params = init_params(&mut rng, d, hidden, c, 0.5, 0.1, lambda);
    Instance {
        x,
        graph,
        labels,
        params,
    }
}

#[test]
fn adaptive_gradients_match_finite_differences() {
    let inst = instance(1, 6, 4, 3, 2, 1.0);
    let p = inst.graph.normalize_with_self_loops();
    let a_f = simp_gcn_core::sim::build_knn_graph(&inst.x, 2).unwrap();
    let pf = a_f.normalize_plain();
    let prop = Propagation::Adaptive { orig: &p, feat: &pf };
    let pairs = sample_pairs_from_features(&inst.x, 2).unwrap();
    let inputs = LossInputs {
        labels: &inst.labels,
        train_mask: &[0, 1, 2, 3],
        pairs: Some(&pairs),
        weight_decay: 5e-4,
    };
    let report = finite_diff_check(&inst.x, &prop, &inst.params, &inputs, FD_H).unwrap();
    assert!(
        report.passes(FD_TOL),
        "max rel err {} at coordinate {}",
        report.max_rel_err,
        report.worst_index
    );
}

#[test]
fn fixed_mode_gradients_match_finite_differences() {
    let inst = instance(7, 8, 5, 4, 3, 0.0);
    let p = inst.graph.normalize_with_self_loops();
    let prop = Propagation::Fixed(&p);
    let inputs = LossInputs {
        labels: &inst.labels,
        train_mask: &[0, 2, 4],
        pairs: None,
        weight_decay: 0.0,
    };
    let report = finite_diff_check(&inst.x, &prop, &inst.params, &inputs, FD_H).unwrap();
    assert!(report.passes(FD_TOL), "max rel err {}", report.max_rel_err);
}

#[test]
fn lambda_zero_detaches_ssl_head() {
    let mut inst = instance(3, 6, 4, 3, 2, 0.0);
    inst.params.ssl_head = SslHead {
        w: vec![3.7, -1.2, 0.4],
        b: 9.9,
    };
    let p = inst.graph.normalize_with_self_loops();
    let a_f = simp_gcn_core::sim::build_knn_graph(&inst.x, 2).unwrap();
    let pf = a_f.normalize_plain();
    let prop = Propagation::Adaptive { orig: &p, feat: &pf };
    let inputs = LossInputs {
        labels: &inst.labels,
        train_mask: &[0, 1],
        pairs: None,
        weight_decay: 0.0,
    };
    let trace = forward(&inst.x, &prop, &inst.params, None).unwrap();
    let grads = backward(&trace, &prop, &inst.params, &inputs).unwrap();
    assert!(grads.ssl_w.iter().all(|&g| g == 0.0));
    assert_eq!(grads.ssl_b, 0.0);
}

#[test]
fn corrupted_gradient_fails_the_check() {
    let inst = instance(11, 6, 3, 3, 2, 0.0);
    let p = inst.graph.normalize_with_self_loops();
    let prop = Propagation::Fixed(&p);
    let inputs = LossInputs {
        labels: &inst.labels,
        train_mask: &[0, 1, 2],
        pairs: None,
        weight_decay: 0.0,
    };
    let trace = forward(&inst.x, &prop, &inst.params, None).unwrap();
    let mut analytic = backward(&trace, &prop, &inst.params, &inputs)
        .unwrap()
        .flatten();
    analytic[0] += 0.5;
    let numeric = finite_diff_gradients(&inst.x, &prop, &inst.params, &inputs, FD_H).unwrap();
    let rel = (analytic[0] - numeric[0]).abs()
        / analytic[0].abs().max(numeric[0].abs()).max(1e-6);
    assert!(rel > FD_TOL, "corruption went undetected, rel err {rel}");
}

#[test]
fn check_passes_across_seeds() {
    for seed in [21, 22, 23] {
        let inst = instance(seed, 6, 4, 3, 2, 1.0);
        let p = inst.graph.normalize_with_self_loops();
        let a_f = simp_gcn_core::sim::build_knn_graph(&inst.x, 2).unwrap();
        let pf = a_f.normalize_plain();
        let prop = Propagation::Adaptive { orig: &p, feat: &pf };
        let pairs = sample_pairs_from_features(&inst.x, 2).unwrap();
        let inputs = LossInputs {
            labels: &inst.labels,
            train_mask: &[1, 3, 5],
            pairs: Some(&pairs),
            weight_decay: 5e-4,
        };
        let report = finite_diff_check(&inst.x, &prop, &inst.params, &inputs, FD_H).unwrap();
        assert!(report.passes(FD_TOL), "seed {seed}: {}", report.max_rel_err);
    }
}

/// Independently coded dense plain-GCN forward/backward. Uses the naive
/// chained formulation `Z = P (H W)` with dense operators throughout; no
/// code shared with the library's factored backward pass.
mod dense_gcn {
    use simp_gcn_core::Dense;

    pub struct Oracle {
        pub logits: Dense,
        pub d_w1: Dense,
        pub d_w2: Dense,
    }

    pub fn run(
        p: &Dense,
        x: &Dense,
        w1: &Dense,
        w2: &Dense,
        labels: &[usize],
        mask: &[usize],
        weight_decay: f64,
    ) -> Oracle {
        let z1 = p.matmul(&x.matmul(w1));
        let h1 = z1.map(|v| v.max(0.0));
        let logits = p.matmul(&h1.matmul(w2));

        // softmax cross-entropy gradient over the mask
        let n = logits.rows();
        let c = logits.cols();
        let mut d_logits = Dense::zeros(n, c);
        for &i in mask {
            let row = logits.row(i);
            let max = row.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|&v| (v - max).exp()).collect();
            let denom: f64 = exps.iter().sum();
            for (j, &e) in exps.iter().enumerate() {
                let soft = e / denom;
                let ind = if labels[i] == j { 1.0 } else { 0.0 };
                d_logits.set(i, j, (soft - ind) / mask.len() as f64);
            }
        }

        // logits = P H1 W2, P symmetric
        let p_dlogits = p.matmul(&d_logits);
        let mut d_w2 = h1.transpose_matmul(&p_dlogits);
        d_w2.add_scaled(weight_decay, w2);
        let d_h1 = p_dlogits.matmul_transpose(w2);
        let mut d_z1 = d_h1;
        for (g, &z) in d_z1.data_mut().iter_mut().zip(z1.data()) {
            if z <= 0.0 {
                *g = 0.0;
            }
        }
        let p_dz1 = p.matmul(&d_z1);
        let mut d_w1 = x.transpose_matmul(&p_dz1);
        d_w1.add_scaled(weight_decay, w1);
        Oracle { logits, d_w1, d_w2 }
    }
}

#[test]
fn fixed_mode_reduces_to_plain_gcn_backprop() {
    for seed in 0..5u64 {
        let inst = instance(40 + seed, 7, 4, 3, 2, 0.0);
        let p = inst.graph.normalize_with_self_loops();
        let prop = Propagation::Fixed(&p);
        let mask = [0, 1, 2, 3];
        let inputs = LossInputs {
            labels: &inst.labels,
            train_mask: &mask,
            pairs: None,
            weight_decay: 5e-4,
        };
        let trace = forward(&inst.x, &prop, &inst.params, None).unwrap();
        let grads = backward(&trace, &prop, &inst.params, &inputs).unwrap();

        let oracle = dense_gcn::run(
            &p.to_dense(),
            &inst.x,
            &inst.params.layers[0].w,
            &inst.params.layers[1].w,
            &inst.labels,
            &mask,
            5e-4,
        );
        assert!(trace.logits().max_abs_diff(&oracle.logits) < 1e-10);
        assert!(grads.layers[0].w.max_abs_diff(&oracle.d_w1) < 1e-10);
        assert!(grads.layers[1].w.max_abs_diff(&oracle.d_w2) < 1e-10);
        // score/self-loop parameters are frozen in fixed mode
        assert!(grads.layers.iter().all(|l| l.w_s.iter().all(|&g| g == 0.0)
            && l.w_k.iter().all(|&g| g == 0.0)
            && l.b_s == 0.0
            && l.b_k == 0.0));
    }
}
