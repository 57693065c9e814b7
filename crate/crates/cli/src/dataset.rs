//! On-disk dataset format and loader.
//!
//! A dataset directory holds three text files:
//!
//! ```text
//! graph.txt      "n m" header, then m lines "i j" with i < j (undirected edges)
//! features.txt   "n d" header, then n rows of d whitespace-separated reals
//! labels.txt     "n C" header, then n lines with one class id in [0, C)
//! ```
//!
//! Optional `train.txt` / `val.txt` / `test.txt` files (one node id per
//! line) carry a canonical split; see [`crate::split`].

use std::fs;
use std::path::{Path, PathBuf};

use simp_gcn_core::{Dense, SparseGraph};

use crate::error::{CliError, Result};

/// Environment variable naming the directory that holds dataset folders.
pub const DATA_ROOT_ENV: &str = "SIMP_GCN_DATA";

/// Dataset root: `$SIMP_GCN_DATA` if set, else `./data`.
pub fn data_root() -> PathBuf {
    std::env::var_os(DATA_ROOT_ENV)
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("data"))
}

/// A fully loaded and validated dataset.
#[derive(Debug, Clone)]
pub struct Dataset {
    pub name: String,
    pub graph: SparseGraph,
    pub features: Dense,
    pub labels: Vec<usize>,
    pub num_classes: usize,
}

impl Dataset {
    pub fn n(&self) -> usize {
        self.features.rows()
    }

    pub fn num_features(&self) -> usize {
        self.features.cols()
    }
}

fn read_lines(path: &Path) -> Result<Vec<String>> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    Ok(text.lines().map(|l| l.to_string()).collect())
}

/// Parses a two-integer header like `n m`.
fn parse_header(path: &Path, lines: &[String]) -> Result<(usize, usize)> {
    let first = lines
        .first()
        .ok_or_else(|| CliError::parse(path, 1, "empty file, expected a header line"))?;
    let mut it = first.split_whitespace();
    let mut next = |what: &str| -> Result<usize> {
        it.next()
            .ok_or_else(|| CliError::parse(path, 1, format!("header missing {what}")))?
            .parse()
            .map_err(|_| CliError::parse(path, 1, format!("header {what} is not an integer")))
    };
    let a = next("first field")?;
    let b = next("second field")?;
    Ok((a, b))
}

fn load_graph(path: &Path) -> Result<SparseGraph> {
    let lines = read_lines(path)?;
    let (n, m) = parse_header(path, &lines)?;
    if lines.len() < m + 1 {
        return Err(CliError::parse(
            path,
            lines.len() + 1,
            format!("expected {m} edge lines, found {}", lines.len() - 1),
        ));
    }
    let mut g = SparseGraph::new(n);
    for (idx, line) in lines[1..=m].iter().enumerate() {
        let lineno = idx + 2;
        let mut it = line.split_whitespace();
        let mut next = |what: &str| -> Result<usize> {
            it.next()
                .ok_or_else(|| CliError::parse(path, lineno, format!("missing {what}")))?
                .parse()
                .map_err(|_| CliError::parse(path, lineno, format!("{what} is not an integer")))
        };
        let i = next("source node")?;
        let j = next("target node")?;
        if i >= j {
            return Err(CliError::parse(
                path,
                lineno,
                format!("edge ({i}, {j}) must satisfy i < j"),
            ));
        }
        g.add_edge(i, j, 1.0)
            .map_err(|e| CliError::parse(path, lineno, e.to_string()))?;
    }
    Ok(g)
}

fn load_features(path: &Path) -> Result<Dense> {
    let lines = read_lines(path)?;
    let (n, d) = parse_header(path, &lines)?;
    if lines.len() < n + 1 {
        return Err(CliError::parse(
            path,
            lines.len() + 1,
            format!("expected {n} feature rows, found {}", lines.len() - 1),
        ));
    }
    let mut data = Vec::with_capacity(n * d);
    for (idx, line) in lines[1..=n].iter().enumerate() {
        let lineno = idx + 2;
        let mut count = 0;
        for tok in line.split_whitespace() {
            let v: f64 = tok
                .parse()
                .map_err(|_| CliError::parse(path, lineno, format!("bad real value {tok:?}")))?;
            data.push(v);
            count += 1;
        }
        if count != d {
            return Err(CliError::parse(
                path,
                lineno,
                format!("expected {d} values, found {count}"),
            ));
        }
    }
    Ok(Dense::from_vec(n, d, data))
}

fn load_labels(path: &Path) -> Result<(Vec<usize>, usize)> {
    let lines = read_lines(path)?;
    let (n, c) = parse_header(path, &lines)?;
    if lines.len() < n + 1 {
        return Err(CliError::parse(
            path,
            lines.len() + 1,
            format!("expected {n} label lines, found {}", lines.len() - 1),
        ));
    }
    let mut labels = Vec::with_capacity(n);
    for (idx, line) in lines[1..=n].iter().enumerate() {
        let lineno = idx + 2;
        let y: usize = line
            .trim()
            .parse()
            .map_err(|_| CliError::parse(path, lineno, format!("bad label {:?}", line.trim())))?;
        if y >= c {
            return Err(CliError::parse(
                path,
                lineno,
                format!("label {y} out of range for {c} classes"),
            ));
        }
        labels.push(y);
    }
    Ok((labels, c))
}

/// Loads `graph.txt`, `features.txt` and `labels.txt` from `dir` and
/// cross-validates node counts.
pub fn load_dataset(dir: &Path) -> Result<Dataset> {
    let graph = load_graph(&dir.join("graph.txt"))?;
    let features = load_features(&dir.join("features.txt"))?;
    let (labels, num_classes) = load_labels(&dir.join("labels.txt"))?;
    let n = features.rows();
    for (what, got) in [("graph.txt", graph.n()), ("labels.txt", labels.len())] {
        if got != n {
            return Err(CliError::Invalid(format!(
                "{}: node count {got} disagrees with features.txt ({n})",
                dir.join(what).display()
            )));
        }
    }
    let name = dir
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "dataset".into());
    Ok(Dataset { name, graph, features, labels, num_classes })
}

/// Writes a dataset back out in the project formats (inverse of
/// [`load_dataset`] up to whitespace).
pub fn write_dataset(dir: &Path, ds: &Dataset) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let mut graph = format!("{} {}\n", ds.graph.n(), ds.graph.num_edges());
    for (i, j, _) in ds.graph.edges() {
        graph.push_str(&format!("{i} {j}\n"));
    }
    let mut feats = format!("{} {}\n", ds.features.rows(), ds.features.cols());
    for i in 0..ds.features.rows() {
        let row: Vec<String> = ds.features.row(i).iter().map(|v| format!("{v:?}")).collect();
        feats.push_str(&row.join(" "));
        feats.push('\n');
    }
    let mut labels = format!("{} {}\n", ds.labels.len(), ds.num_classes);
    for &y in &ds.labels {
        labels.push_str(&format!("{y}\n"));
    }
    for (file, body) in [
        ("graph.txt", graph),
        ("features.txt", feats),
        ("labels.txt", labels),
    ] {
        let path = dir.join(file);
        fs::write(&path, body).map_err(|e| CliError::io(path, e))?;
    }
    Ok(())
}
