//! Command-line surface: training, evaluation, diagnostics and ablations.
//!
//! Every command is deterministic given `--seed`; report payloads carry no
//! timestamps, so identical invocations write byte-identical files.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use simp_gcn::checkpoint::{parse_mode, Checkpoint};
use simp_gcn::error::{CliError, Result};
use simp_gcn::presets::preset;
use simp_gcn::report::{mean_std, Report};
use simp_gcn::run;
use simp_gcn::Dataset;

use simp_gcn_core::grad::{backward, finite_diff_check, finite_diff_gradients, LossInputs};
use simp_gcn_core::model::forward;
use simp_gcn_core::rng::Rng;
use simp_gcn_core::sim::sample_pairs_from_features;
use simp_gcn_core::train::{init_params, prepare, random_instance, Mode, Split, TrainConfig};

#[derive(Parser)]
#[command(name = "simp-gcn", about = "Similarity-preserving graph convolution experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Hyperparameter overrides; unset flags fall back to the dataset preset.
#[derive(Args, Debug, Clone, Default)]
struct HyperFlags {
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    hidden: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    #[arg(long)]
    weight_decay: Option<f64>,
    #[arg(long)]
    dropout: Option<f64>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    patience: Option<usize>,
    #[arg(long)]
    b_s_init: Option<f64>,
}

impl HyperFlags {
    fn apply(&self, cfg: &mut TrainConfig) {
        macro_rules! set {
            ($($field:ident),*) => {
                $(if let Some(v) = self.$field { cfg.$field = v; })*
            };
        }
        set!(lambda, gamma, k, m, hidden, lr, weight_decay, dropout, epochs, b_s_init);
        if self.patience.is_some() {
            cfg.patience = self.patience;
        }
        // keep a preset's patience meaningful when --epochs shrinks the run
        if let Some(p) = cfg.patience {
            cfg.patience = Some(p.min(cfg.epochs));
        }
    }
}

// parsed exactly once; variant size imbalance is irrelevant
#[allow(clippy::large_enum_variant)]
#[derive(Subcommand)]
enum Command {
    /// Train one or more seeded models and report mean/std test accuracy.
    Train {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value = "simp")]
        mode: String,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Search the regime's hyperparameter grid on the validation split.
        #[arg(long)]
        grid: bool,
        /// Randomly rewire this fraction of edges before training
        /// (uniform add/remove smoke test; not an adversarial attack).
        #[arg(long)]
        perturb_random: Option<f64>,
        #[arg(long)]
        out: Option<PathBuf>,
        /// Save the best-validation run's parameters here.
        #[arg(long)]
        save_checkpoint: Option<PathBuf>,
        #[command(flatten)]
        hyper: HyperFlags,
    },
    /// Restore a checkpoint and report test accuracy.
    Eval {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Overlap between the feature kNN graph, the hidden kNN graph and the
    /// original graph, from a trained checkpoint.
    AnalyzeOverlap {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long, default_value_t = 3)]
        k: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Mean Laplacian smoothness of feature columns (and of the hidden
    /// representation when a checkpoint is given).
    Smoothness {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Train the kNN-graph-only and union-graph baselines.
    KnnBaseline {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 1)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Four-row ablation: full model, no SSL, no adaptive self-loops, plain.
    Ablate {
        #[arg(long)]
        dataset: String,
        #[arg(long, default_value_t = 10)]
        runs: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Verify analytic gradients against central finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Deliberately corrupt one gradient coordinate (negative control).
        #[arg(long)]
        corrupt: bool,
    },
    /// Ranges and histograms of the learned gates s and self-loops gamma*K.
    InspectScores {
        #[arg(long)]
        dataset: String,
        #[arg(long)]
        checkpoint: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn push_config(report: &mut Report, mode: Mode, cfg: &TrainConfig) {
    report.push("mode", mode.as_str());
    report.push_f64("lr", cfg.lr);
    report.push_f64("weight_decay", cfg.weight_decay);
    report.push_f64("dropout", cfg.dropout);
    report.push("epochs", cfg.epochs);
    match cfg.patience {
        Some(p) => report.push("patience", p),
        None => report.push("patience", "none"),
    }
    report.push("hidden", cfg.hidden);
    report.push("k", cfg.k);
    report.push("m", cfg.m);
    report.push_f64("lambda", cfg.lambda);
    report.push_f64("gamma", cfg.gamma);
    report.push_f64("b_s_init", cfg.b_s_init);
}

fn push_outcomes(report: &mut Report, prefix: &str, outcomes: &[run::RunOutcome]) {
    let accs: Vec<f64> = outcomes.iter().map(|o| o.test_acc).collect();
    let (mean, std) = mean_std(&accs);
    for o in outcomes {
        report.push_f64(&format!("{prefix}test_acc_seed_{}", o.seed), o.test_acc);
    }
    report.push(&format!("{prefix}runs"), outcomes.len());
    report.push_f64(&format!("{prefix}test_acc_mean"), mean);
    report.push_f64(&format!("{prefix}test_acc_std"), std);
}

fn finish(report: Report, out: Option<PathBuf>) -> Result<()> {
    print!("{}", report.to_text());
    if let Some(path) = out {
        report.write(&path)?;
    }
    Ok(())
}

/// Loads the dataset, applies flag overrides on the preset config and
/// resolves the split. The split seed equals the run base seed.
fn setup(
    dataset: &str,
    hyper: &HyperFlags,
    seed: u64,
) -> Result<(Dataset, TrainConfig, simp_gcn::presets::Preset, Split, bool)> {
    let (ds, dir) = run::resolve_dataset(dataset)?;
    let p = preset(&ds.name);
    let mut cfg = p.config.clone();
    hyper.apply(&mut cfg);
    let (split, canonical) = run::resolve_split(&ds, &dir, p.split, seed)?;
    Ok((ds, cfg, p, split, canonical))
}

#[allow(clippy::too_many_arguments)]
fn cmd_train(
    dataset: String,
    mode: String,
    runs: usize,
    seed: u64,
    grid: bool,
    perturb_random: Option<f64>,
    out: Option<PathBuf>,
    save_checkpoint: Option<PathBuf>,
    hyper: HyperFlags,
) -> Result<()> {
    let mode = parse_mode(&mode)?;
    let (mut ds, mut cfg, p, split, canonical) = setup(&dataset, &hyper, seed)?;
    if let Some(frac) = perturb_random {
        ds.graph = run::perturb_edges(&ds.graph, frac, seed ^ 0x7065_7274)?;
    }
    if grid {
        cfg = run::grid_search(&ds, &split, mode, &p, seed)?;
        hyper.apply(&mut cfg);
    }
    let outcomes = run::run_many(&ds, &split, mode, &cfg, runs, seed)?;

    let mut report = Report::new();
    report.push("command", "train");
    report.push("dataset", &ds.name);
    report.push("seed", seed);
    report.push("split_source", if canonical { "files" } else { "generated" });
    report.push("grid", grid);
    if let Some(frac) = perturb_random {
        report.push_f64("perturb_random", frac);
    }
    push_config(&mut report, mode, &cfg);
    push_outcomes(&mut report, "", &outcomes);

    if let Some(path) = save_checkpoint {
        let best = run::best_run(&outcomes);
        let mut ck_cfg = cfg.clone();
        ck_cfg.seed = outcomes[best].seed;
        Checkpoint::new(&ds.name, mode, &ck_cfg, &outcomes[best].params).save(&path)?;
        report.push("checkpoint", path.display());
    }
    finish(report, out)
}

fn cmd_eval(dataset: String, checkpoint: PathBuf, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let ck = Checkpoint::load(&checkpoint)?;
    let mode = ck.mode()?;
    let cfg = ck.config.to_config();
    let (ds, dir) = run::resolve_dataset(&dataset)?;
    let p = preset(&ds.name);
    let (split, canonical) = run::resolve_split(&ds, &dir, p.split, seed)?;
    let params = ck.to_params()?;
    let acc = run::eval_accuracy(&ds, &split, mode, &cfg, &params)?;

    let mut report = Report::new();
    report.push("command", "eval");
    report.push("dataset", &ds.name);
    report.push("mode", mode.as_str());
    report.push("seed", seed);
    report.push("split_source", if canonical { "files" } else { "generated" });
    report.push_f64("test_acc", acc);
    finish(report, out)
}

fn cmd_analyze_overlap(
    dataset: String,
    checkpoint: PathBuf,
    k: usize,
    out: Option<PathBuf>,
) -> Result<()> {
    let ck = Checkpoint::load(&checkpoint)?;
    let mode = ck.mode()?;
    let cfg = ck.config.to_config();
    let (ds, _) = run::resolve_dataset(&dataset)?;
    let hidden = run::infer_logits(&ds, mode, &cfg, &ck.to_params()?)?;
    let table = run::analyze_overlap(&ds, &hidden, k)?;

    let mut report = Report::new();
    report.push("command", "analyze-overlap");
    report.push("dataset", &ds.name);
    report.push("mode", mode.as_str());
    report.push("k", k);
    // hidden graph is built from the final-layer pre-softmax representation
    report.push("hidden_source", "final_layer_pre_softmax");
    report.push_f64("overlap_feat_hidden", table.feat_hidden);
    report.push_f64("overlap_hidden_orig", table.hidden_orig);
    report.push_f64("overlap_feat_orig", table.feat_orig);
    finish(report, out)
}

fn cmd_smoothness(
    dataset: String,
    checkpoint: Option<PathBuf>,
    out: Option<PathBuf>,
) -> Result<()> {
    let (ds, _) = run::resolve_dataset(&dataset)?;
    let mut report = Report::new();
    report.push("command", "smoothness");
    report.push("dataset", &ds.name);
    let s_x = run::mean_column_smoothness(&ds.features, &ds.graph)?;
    report.push_f64("feature_smoothness", s_x);
    if let Some(path) = checkpoint {
        let ck = Checkpoint::load(&path)?;
        let hidden = run::infer_logits(&ds, ck.mode()?, &ck.config.to_config(), &ck.to_params()?)?;
        let s_h = run::mean_column_smoothness(&hidden, &ds.graph)?;
        report.push_f64("hidden_smoothness", s_h);
    }
    finish(report, out)
}

fn cmd_knn_baseline(
    dataset: String,
    runs: usize,
    seed: u64,
    k: Option<usize>,
    out: Option<PathBuf>,
) -> Result<()> {
    let hyper = HyperFlags { k, ..HyperFlags::default() };
    let (ds, cfg, _, split, canonical) = setup(&dataset, &hyper, seed)?;
    let mut report = Report::new();
    report.push("command", "knn-baseline");
    report.push("dataset", &ds.name);
    report.push("seed", seed);
    report.push("split_source", if canonical { "files" } else { "generated" });
    report.push("k", cfg.k);
    for mode in [Mode::KnnGcn, Mode::APlusKnnGcn] {
        let outcomes = run::run_many(&ds, &split, mode, &cfg, runs, seed)?;
        push_outcomes(&mut report, &format!("{}_", mode.as_str()), &outcomes);
    }
    finish(report, out)
}

fn cmd_ablate(dataset: String, runs: usize, seed: u64, out: Option<PathBuf>) -> Result<()> {
    let (ds, base, _, split, canonical) = setup(&dataset, &HyperFlags::default(), seed)?;
    let mut report = Report::new();
    report.push("command", "ablate");
    report.push("dataset", &ds.name);
    report.push("seed", seed);
    report.push("split_source", if canonical { "files" } else { "generated" });
    push_config(&mut report, Mode::Simp, &base);

    // {SSL on/off} x {adaptive self-loops on/off}; the doubly-ablated row
    // still mixes A with A_f through the learned gate, and plain graph
    // convolution is included as the reference row.
    let rows: [(&str, Mode, f64, f64); 5] = [
        ("full", Mode::Simp, base.lambda, base.gamma),
        ("no_ssl", Mode::Simp, 0.0, base.gamma),
        ("no_selfloop", Mode::Simp, base.lambda, 0.0),
        ("no_ssl_no_selfloop", Mode::Simp, 0.0, 0.0),
        ("plain_gcn", Mode::Gcn, 0.0, 0.0),
    ];
    for (label, mode, lambda, gamma) in rows {
        let mut cfg = base.clone();
        cfg.lambda = lambda;
        cfg.gamma = gamma;
        let outcomes = run::run_many(&ds, &split, mode, &cfg, runs, seed)?;
        push_outcomes(&mut report, &format!("{label}_"), &outcomes);
    }
    finish(report, out)
}

fn cmd_gradcheck(seed: u64, corrupt: bool) -> Result<()> {
    // canned instance: 6 nodes, 4 features, hidden 3, 2 classes
    let (x, graph, labels) = random_instance(seed, 6, 4, 2, 0.5);
    let mut rng = Rng::new(seed ^ 0x6772_6164);
    let params = init_params(&mut rng, 4, 3, 2, 0.5, 0.1, 1.0);
    let cfg = TrainConfig { k: 2, m: 2, ..TrainConfig::default() };
    let prepared = prepare(&x, &graph, Mode::Simp, &cfg)?;
    let pairs = sample_pairs_from_features(&x, cfg.m)?;
    let inputs = LossInputs {
        labels: &labels,
        train_mask: &[0, 1, 2, 3],
        pairs: Some(&pairs),
        weight_decay: 5e-4,
    };
    let prop = prepared.propagation();
    let max_rel_err = if corrupt {
        let trace = forward(&x, &prop, &params, None)?;
        let mut analytic = backward(&trace, &prop, &params, &inputs)?.flatten();
        analytic[0] += 1.0;
        let numeric = finite_diff_gradients(&x, &prop, &params, &inputs, 1e-5)?;
        analytic
            .iter()
            .zip(&numeric)
            .map(|(&a, &fd)| (a - fd).abs() / a.abs().max(fd.abs()).max(1e-6))
            .fold(0.0f64, f64::max)
    } else {
        finite_diff_check(&x, &prop, &params, &inputs, 1e-5)?.max_rel_err
    };
    println!("gradcheck seed={seed} max_rel_err={max_rel_err:?}");
    if max_rel_err >= 1e-4 {
        return Err(CliError::Invalid(format!(
            "gradient check failed: max relative error {max_rel_err:e} >= 1e-4"
        )));
    }
    println!("gradcheck PASS");
    Ok(())
}

fn push_stats(report: &mut Report, label: &str, values: &[f64]) {
    let min = values.iter().cloned().fold(f64::INFINITY, f64::min);
    let max = values.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    report.push_f64(&format!("{label}_min"), min);
    report.push_f64(&format!("{label}_max"), max);
    // 10-bin histogram over [min, max]
    let mut bins = [0usize; 10];
    let width = (max - min).max(f64::MIN_POSITIVE);
    for &v in values {
        let b = (((v - min) / width) * 10.0).floor() as usize;
        bins[b.min(9)] += 1;
    }
    let rendered: Vec<String> = bins.iter().map(|c| c.to_string()).collect();
    report.push(&format!("{label}_hist"), rendered.join(","));
}

fn cmd_inspect_scores(dataset: String, checkpoint: PathBuf, out: Option<PathBuf>) -> Result<()> {
    let ck = Checkpoint::load(&checkpoint)?;
    let mode = ck.mode()?;
    if mode != Mode::Simp {
        return Err(CliError::Invalid(format!(
            "inspect-scores needs an adaptive-mode checkpoint, got mode {:?}",
            ck.mode
        )));
    }
    let cfg = ck.config.to_config();
    let params = ck.to_params()?;
    let (ds, _) = run::resolve_dataset(&dataset)?;
    let prepared = prepare(&ds.features, &ds.graph, mode, &cfg)?;
    let trace = forward(&ds.features, &prepared.propagation(), &params, None)?;

    let mut report = Report::new();
    report.push("command", "inspect-scores");
    report.push("dataset", &ds.name);
    report.push_f64("gamma", params.gamma);
    for (l, layer) in trace.layers.iter().enumerate() {
        push_stats(&mut report, &format!("s_{}", l + 1), &layer.s);
        let gk: Vec<f64> = layer.k.iter().map(|&v| params.gamma * v).collect();
        push_stats(&mut report, &format!("gamma_k_{}", l + 1), &gk);
    }
    finish(report, out)
}

fn dispatch(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train {
            dataset,
            mode,
            runs,
            seed,
            grid,
            perturb_random,
            out,
            save_checkpoint,
            hyper,
        } => cmd_train(dataset, mode, runs, seed, grid, perturb_random, out, save_checkpoint, hyper),
        Command::Eval { dataset, checkpoint, seed, out } => cmd_eval(dataset, checkpoint, seed, out),
        Command::AnalyzeOverlap { dataset, checkpoint, k, out } => {
            cmd_analyze_overlap(dataset, checkpoint, k, out)
        }
        Command::Smoothness { dataset, checkpoint, out } => cmd_smoothness(dataset, checkpoint, out),
        Command::KnnBaseline { dataset, runs, seed, k, out } => {
            cmd_knn_baseline(dataset, runs, seed, k, out)
        }
        Command::Ablate { dataset, runs, seed, out } => cmd_ablate(dataset, runs, seed, out),
        Command::Gradcheck { seed, corrupt } => cmd_gradcheck(seed, corrupt),
        Command::InspectScores { dataset, checkpoint, out } => {
            cmd_inspect_scores(dataset, checkpoint, out)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
