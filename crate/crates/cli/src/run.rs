//! Experiment orchestration: dataset resolution, multi-seed runs, grid
//! search, random edge perturbation and checkpoint-driven inference.

use std::path::{Path, PathBuf};

use simp_gcn_core::model::{accuracy, forward, ModelParams};
use simp_gcn_core::rng::Rng;
use simp_gcn_core::sim::build_knn_graph;
use simp_gcn_core::train::{prepare, train, Mode, Split, TrainConfig, TrainHistory};
use simp_gcn_core::{Dense, SparseGraph};

use crate::dataset::{data_root, load_dataset, Dataset};
use crate::error::{CliError, Result};
use crate::presets::{Preset, SplitKind};
use crate::split::{load_split_files, planetoid_split, random_split};

/// Resolves a dataset argument: an existing directory path is loaded as-is,
/// anything else is looked up under the dataset root.
pub fn resolve_dataset(arg: &str) -> Result<(Dataset, PathBuf)> {
    let direct = Path::new(arg);
    let dir = if direct.is_dir() {
        direct.to_path_buf()
    } else {
        let under_root = data_root().join(arg);
        if !under_root.is_dir() {
            return Err(CliError::Invalid(format!(
                "dataset {arg:?} not found (no such directory, and {} does not exist; \
                 set {} or run scripts/fetch_data.py)",
                under_root.display(),
                crate::dataset::DATA_ROOT_ENV
            )));
        }
        under_root
    };
    Ok((load_dataset(&dir)?, dir))
}

/// Canonical split files if present, else the preset's seeded generator.
/// Returns the split and whether it came from files.
pub fn resolve_split(ds: &Dataset, dir: &Path, kind: SplitKind, seed: u64) -> Result<(Split, bool)> {
    if let Some(split) = load_split_files(dir, ds.n())? {
        return Ok((split, true));
    }
    let split = match kind {
        SplitKind::Planetoid => planetoid_split(ds, seed)?,
        SplitKind::Stratified => random_split(ds, (0.6, 0.2, 0.2), seed)?,
    };
    Ok((split, false))
}

/// Randomly removes `fraction` of the edges and adds the same number of
/// previously absent edges. A smoke-test perturbation only — this is a
/// uniform random edit, not an adversarial attack.
pub fn perturb_edges(graph: &SparseGraph, fraction: f64, seed: u64) -> Result<SparseGraph> {
    if !(0.0..=1.0).contains(&fraction) {
        return Err(CliError::Invalid(format!(
            "perturbation fraction must be in [0, 1], got {fraction}"
        )));
    }
    let n = graph.n();
    let mut edges: Vec<(usize, usize)> = graph.edges().map(|(i, j, _)| (i, j)).collect();
    let m = edges.len();
    let budget = (fraction * m as f64).round() as usize;
    let mut rng = Rng::new(seed);
    rng.shuffle(&mut edges);
    let kept: Vec<(usize, usize)> = edges[budget..].to_vec();
    let mut out = SparseGraph::new(n);
    for &(i, j) in &kept {
        out.add_edge(i, j, 1.0).map_err(CliError::Core)?;
    }
    let mut added = 0;
    let mut attempts = 0;
    while added < budget && attempts < 100 * budget.max(1) {
        attempts += 1;
        let i = rng.gen_index(n);
        let j = rng.gen_index(n);
        if i == j || out.has_edge(i.min(j), i.max(j)) || graph.has_edge(i.min(j), i.max(j)) {
            continue;
        }
        out.add_edge(i.min(j), i.max(j), 1.0).map_err(CliError::Core)?;
        added += 1;
    }
    Ok(out)
}

/// One seeded training run's headline numbers.
#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub seed: u64,
    pub val_acc: f64,
    pub test_acc: f64,
    pub history: TrainHistory,
    pub params: ModelParams,
}

/// Trains `runs` models with seeds `base_seed + i` and collects best-epoch
/// validation/test accuracy for each.
pub fn run_many(
    ds: &Dataset,
    split: &Split,
    mode: Mode,
    config: &TrainConfig,
    runs: usize,
    base_seed: u64,
) -> Result<Vec<RunOutcome>> {
    if runs == 0 {
        return Err(CliError::Invalid("--runs must be at least 1".into()));
    }
    let mut out = Vec::with_capacity(runs);
    for r in 0..runs {
        let mut cfg = config.clone();
        cfg.seed = base_seed + r as u64;
        let (params, history) = train(
            &ds.features,
            &ds.graph,
            &ds.labels,
            ds.num_classes,
            split,
            mode,
            &cfg,
        )?;
        let best = &history.records[history.best_epoch];
        out.push(RunOutcome {
            seed: cfg.seed,
            val_acc: best.val_acc,
            test_acc: best.test_acc,
            history,
            params,
        });
    }
    Ok(out)
}

/// Index of the run with the highest validation accuracy (ties: first).
pub fn best_run(outcomes: &[RunOutcome]) -> usize {
    let mut best = 0;
    for (i, o) in outcomes.iter().enumerate().skip(1) {
        if o.val_acc > outcomes[best].val_acc {
            best = i;
        }
    }
    best
}

/// Picks the grid candidate with the best single-run validation accuracy
/// (ties: earliest candidate). Returns the winning config.
pub fn grid_search(
    ds: &Dataset,
    split: &Split,
    mode: Mode,
    p: &Preset,
    seed: u64,
) -> Result<TrainConfig> {
    let candidates = crate::presets::grid(p, mode);
    let mut best: Option<(f64, TrainConfig)> = None;
    for mut cfg in candidates {
        cfg.seed = seed;
        let (_, history) = train(
            &ds.features,
            &ds.graph,
            &ds.labels,
            ds.num_classes,
            split,
            mode,
            &cfg,
        )?;
        let val = history.records[history.best_epoch].val_acc;
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, cfg));
        }
    }
    Ok(best.expect("grid is never empty").1)
}

/// Dropout-free forward pass under a given mode/config; returns the logits
/// (the final-layer pre-softmax representation).
pub fn infer_logits(
    ds: &Dataset,
    mode: Mode,
    config: &TrainConfig,
    params: &ModelParams,
) -> Result<Dense> {
    let prepared = prepare(&ds.features, &ds.graph, mode, config)?;
    let trace = forward(&ds.features, &prepared.propagation(), params, None)?;
    Ok(trace.logits().clone())
}

/// Test accuracy of restored parameters on a split.
pub fn eval_accuracy(
    ds: &Dataset,
    split: &Split,
    mode: Mode,
    config: &TrainConfig,
    params: &ModelParams,
) -> Result<f64> {
    let logits = infer_logits(ds, mode, config, params)?;
    Ok(accuracy(&logits, &ds.labels, &split.test))
}

/// Overlap diagnostics between the feature kNN graph, the hidden-state kNN
/// graph (built from the final-layer representation) and the original graph.
pub struct OverlapTable {
    pub feat_hidden: f64,
    pub hidden_orig: f64,
    pub feat_orig: f64,
}

pub fn analyze_overlap(ds: &Dataset, hidden: &Dense, k: usize) -> Result<OverlapTable> {
    let a_f = build_knn_graph(&ds.features, k)?;
    let a_h = build_knn_graph(hidden, k)?;
    Ok(OverlapTable {
        feat_hidden: simp_gcn_core::graph::overlap(&a_f, &a_h)?,
        hidden_orig: simp_gcn_core::graph::overlap(&a_h, &ds.graph)?,
        feat_orig: simp_gcn_core::graph::overlap(&a_f, &ds.graph)?,
    })
}

/// Mean smoothness f'Lf of unit-normalized columns of `m` over the graph.
/// Unit normalization makes columns of different scale comparable.
pub fn mean_column_smoothness(m: &Dense, graph: &SparseGraph) -> Result<f64> {
    let d = m.cols();
    let mut total = 0.0;
    let mut counted = 0;
    for j in 0..d {
        let mut col: Vec<f64> = (0..m.rows()).map(|i| m.get(i, j)).collect();
        let norm: f64 = col.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            continue;
        }
        for v in &mut col {
            *v /= norm;
        }
        total += simp_gcn_core::graph::smoothness(&col, graph)?;
        counted += 1;
    }
    if counted == 0 {
        return Err(CliError::Invalid("all columns are zero".into()));
    }
    Ok(total / counted as f64)
}
