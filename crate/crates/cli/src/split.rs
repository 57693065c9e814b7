//! Split generation and split-file IO.
//!
//! Two generators are provided: the citation-network convention (20 train
//! nodes per class, 500 validation, 1000 test) and a per-class stratified
//! 60/20/20 split. Both are deterministic per seed. Canonical split files
//! (`train.txt` / `val.txt` / `test.txt`, one node id per line) are honored
//! when present in a dataset directory.

use std::fs;
use std::path::Path;

use simp_gcn_core::rng::Rng;
use simp_gcn_core::train::Split;

use crate::dataset::Dataset;
use crate::error::{CliError, Result};

/// Groups node ids by class, preserving index order within each class.
fn by_class(labels: &[usize], num_classes: usize) -> Vec<Vec<usize>> {
    let mut groups = vec![Vec::new(); num_classes];
    for (i, &y) in labels.iter().enumerate() {
        groups[y].push(i);
    }
    groups
}

/// 20 train nodes per class, then 500 validation and 1000 test nodes drawn
/// from the remaining pool in shuffled order.
pub fn planetoid_split(ds: &Dataset, seed: u64) -> Result<Split> {
    let mut rng = Rng::new(seed);
    let mut train = Vec::new();
    let mut in_train = vec![false; ds.n()];
    for (class, mut ids) in by_class(&ds.labels, ds.num_classes).into_iter().enumerate() {
        if ids.len() < 20 {
            return Err(CliError::Invalid(format!(
                "class {class} has only {} nodes; 20 per class required",
                ids.len()
            )));
        }
        rng.shuffle(&mut ids);
        for &i in &ids[..20] {
            train.push(i);
            in_train[i] = true;
        }
    }
    let mut pool: Vec<usize> = (0..ds.n()).filter(|&i| !in_train[i]).collect();
    if pool.len() < 1500 {
        return Err(CliError::Invalid(format!(
            "only {} nodes remain after the training draw; 1500 needed for val+test",
            pool.len()
        )));
    }
    rng.shuffle(&mut pool);
    let val = pool[..500].to_vec();
    let test = pool[500..1500].to_vec();
    Ok(Split { train, val, test })
}

/// Per-class stratified split with the given fractions; floor sizes for
/// validation and test, remainder to train.
pub fn random_split(ds: &Dataset, fractions: (f64, f64, f64), seed: u64) -> Result<Split> {
    let (ft, fv, fs) = fractions;
    if (ft + fv + fs - 1.0).abs() > 1e-9 || ft <= 0.0 || fv < 0.0 || fs < 0.0 {
        return Err(CliError::Invalid(format!(
            "split fractions must be positive and sum to 1, got {fractions:?}"
        )));
    }
    let mut rng = Rng::new(seed);
    let mut split = Split { train: Vec::new(), val: Vec::new(), test: Vec::new() };
    for mut ids in by_class(&ds.labels, ds.num_classes) {
        rng.shuffle(&mut ids);
        let sz = ids.len();
        let n_val = (fv * sz as f64).floor() as usize;
        let n_test = (fs * sz as f64).floor() as usize;
        let n_train = sz - n_val - n_test;
        split.train.extend_from_slice(&ids[..n_train]);
        split.val.extend_from_slice(&ids[n_train..n_train + n_val]);
        split.test.extend_from_slice(&ids[n_train + n_val..]);
    }
    Ok(split)
}

fn read_ids(path: &Path) -> Result<Vec<usize>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    text.lines()
        .enumerate()
        .map(|(idx, line)| {
            line.trim().parse().map_err(|_| {
                CliError::parse(path, idx + 1, format!("bad node id {:?}", line.trim()))
            })
        })
        .collect()
}

/// Loads `train.txt`/`val.txt`/`test.txt` from `dir` if all three exist.
pub fn load_split_files(dir: &Path, n: usize) -> Result<Option<Split>> {
    let paths = ["train.txt", "val.txt", "test.txt"].map(|f| dir.join(f));
    if !paths.iter().all(|p| p.exists()) {
        return Ok(None);
    }
    let split = Split {
        train: read_ids(&paths[0])?,
        val: read_ids(&paths[1])?,
        test: read_ids(&paths[2])?,
    };
    split.validate(n)?;
    Ok(Some(split))
}

/// Writes the three split files next to the dataset.
pub fn write_split_files(dir: &Path, split: &Split) -> Result<()> {
    for (file, ids) in [
        ("train.txt", &split.train),
        ("val.txt", &split.val),
        ("test.txt", &split.test),
    ] {
        let path = dir.join(file);
        let body: String = ids.iter().map(|i| format!("{i}\n")).collect();
        fs::write(&path, body).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
