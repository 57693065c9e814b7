//! Per-dataset hyperparameter presets and grid-search candidates.
//!
//! Two regimes exist. Citation-style (assortative) datasets use hidden 128,
//! lr 0.01, 200 epochs, no patience, and the 20-per-class split. Web-page
//! style (disassortative) datasets use lr 0.05, 500 epochs with patience
//! 100 and stratified 60/20/20 splits. `--grid` searches the regime's full
//! candidate set on the validation split; otherwise the preset below is
//! used as the best-known starting point.

use simp_gcn_core::train::{Mode, TrainConfig};

/// How the train/val/test split is generated when no split files exist.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SplitKind {
    /// 20 per class train, 500 val, 1000 test.
    Planetoid,
    /// Per-class stratified 60/20/20.
    Stratified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    Assortative,
    Disassortative,
}

#[derive(Debug, Clone)]
pub struct Preset {
    pub config: TrainConfig,
    pub split: SplitKind,
    pub regime: Regime,
}

/// Best-known preset for a dataset name; unknown names fall back to the
/// disassortative regime (small-graph-safe defaults).
pub fn preset(dataset: &str) -> Preset {
    let assortative = |lambda: f64, gamma: f64, b_s_init: f64| Preset {
        config: TrainConfig {
            lr: 0.01,
            weight_decay: 5e-4,
            dropout: 0.5,
            epochs: 200,
            patience: None,
            hidden: 128,
            k: 20,
            m: 5,
            lambda,
            gamma,
            b_s_init,
            seed: 0,
        },
        split: SplitKind::Planetoid,
        regime: Regime::Assortative,
    };
    let disassortative = |hidden: usize, lambda: f64, gamma: f64| Preset {
        config: TrainConfig {
            lr: 0.05,
            weight_decay: 5e-4,
            dropout: 0.5,
            epochs: 500,
            patience: Some(100),
            hidden,
            k: 20,
            m: 5,
            lambda,
            gamma,
            b_s_init: 0.0,
            seed: 0,
        },
        split: SplitKind::Stratified,
        regime: Regime::Disassortative,
    };
    match dataset {
        "cora" => assortative(5.0, 0.1, 2.0),
        "citeseer" => assortative(5.0, 0.1, 2.0),
        "pubmed" => assortative(0.5, 0.1, 2.0),
        "actor" | "film" => disassortative(32, 1.0, 0.1),
        "cornell" => disassortative(32, 1.0, 0.1),
        "texas" => disassortative(32, 1.0, 0.1),
        "wisconsin" => disassortative(32, 1.0, 0.1),
        _ => disassortative(32, 1.0, 0.1),
    }
}

/// Grid candidates for `--grid`, derived from the preset. For non-adaptive
/// modes the λ/γ/b_s axes are inert, so only the architectural axes vary.
pub fn grid(p: &Preset, mode: Mode) -> Vec<TrainConfig> {
    let mut out = Vec::new();
    match p.regime {
        Regime::Assortative => {
            let lambdas: &[f64] = &[0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0];
            let gammas: &[f64] = &[0.01, 0.1];
            let b_s: &[f64] = &[0.0, 2.0];
            if mode == Mode::Simp {
                for &lambda in lambdas {
                    for &gamma in gammas {
                        for &b_s_init in b_s {
                            let mut c = p.config.clone();
                            c.lambda = lambda;
                            c.gamma = gamma;
                            c.b_s_init = b_s_init;
                            out.push(c);
                        }
                    }
                }
            } else {
                out.push(p.config.clone());
            }
        }
        Regime::Disassortative => {
            let hiddens: &[usize] = &[16, 32, 48];
            let decays: &[f64] = &[5e-4, 5e-5];
            let lambdas: &[f64] = &[0.1, 1.0, 10.0];
            let gammas: &[f64] = &[0.01, 0.1, 1.0];
            for &hidden in hiddens {
                for &weight_decay in decays {
                    if mode == Mode::Simp {
                        for &lambda in lambdas {
                            for &gamma in gammas {
                                let mut c = p.config.clone();
                                c.hidden = hidden;
                                c.weight_decay = weight_decay;
                                c.lambda = lambda;
                                c.gamma = gamma;
                                out.push(c);
                            }
                        }
                    } else {
                        let mut c = p.config.clone();
                        c.hidden = hidden;
                        c.weight_decay = weight_decay;
                        out.push(c);
                    }
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn regimes_have_expected_shapes() {
        let cora = preset("cora");
        assert_eq!(cora.split, SplitKind::Planetoid);
        assert_eq!(cora.config.hidden, 128);
        assert_eq!(cora.config.epochs, 200);
        assert_eq!(cora.config.patience, None);

        let cornell = preset("cornell");
        assert_eq!(cornell.split, SplitKind::Stratified);
        assert_eq!(cornell.config.lr, 0.05);
        assert_eq!(cornell.config.patience, Some(100));
    }

    #[test]
    fn grid_sizes() {
        assert_eq!(grid(&preset("cora"), Mode::Simp).len(), 7 * 2 * 2);
        assert_eq!(grid(&preset("cora"), Mode::Gcn).len(), 1);
        assert_eq!(grid(&preset("texas"), Mode::Simp).len(), 3 * 2 * 3 * 3);
        assert_eq!(grid(&preset("texas"), Mode::Gcn).len(), 3 * 2);
    }
}
