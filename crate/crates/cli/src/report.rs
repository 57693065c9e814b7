//! Run reports: ordered, line-delimited `key=value` records.
//!
//! The format is deliberately plain so identical runs produce byte-identical
//! payloads (no timestamps, no map iteration order). Reals are written with
//! shortest-round-trip formatting, so `read(write(r)) == r` exactly.

use std::fs;
use std::path::Path;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Report {
    entries: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report::default()
    }

    pub fn push(&mut self, key: &str, value: impl std::fmt::Display) {
        debug_assert!(
            !key.contains('=') && !key.contains('\n'),
            "report keys must not contain '=' or newlines"
        );
        self.entries.push((key.to_string(), value.to_string()));
    }

    /// Reals use `{:?}` (shortest representation that parses back exactly).
    pub fn push_f64(&mut self, key: &str, value: f64) {
        self.push(key, format!("{value:?}"));
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.entries
            .iter()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    pub fn get_f64(&self, key: &str) -> Option<f64> {
        self.get(key)?.parse().ok()
    }

    pub fn entries(&self) -> &[(String, String)] {
        &self.entries
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.entries {
            out.push_str(k);
            out.push('=');
            out.push_str(v);
            out.push('\n');
        }
        out
    }

    pub fn from_text(path: &Path, text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (idx, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| {
                CliError::parse(path, idx + 1, format!("expected key=value, got {line:?}"))
            })?;
            entries.push((k.to_string(), v.to_string()));
        }
        Ok(Report { entries })
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_text()).map_err(|e| CliError::io(path, e))
    }

    pub fn read(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Report::from_text(path, &text)
    }
}

/// Sample mean and standard deviation (n-1 denominator; 0 for n < 2).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    if values.is_empty() {
        return (0.0, 0.0);
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn roundtrip_is_exact() {
        let mut r = Report::new();
        r.push("dataset", "toy");
        r.push("seed", 17u64);
        r.push_f64("test_acc_mean", 0.1 + 0.2); // deliberately non-representable
        r.push_f64("test_acc_std", 1e-17);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("report.txt");
        r.write(&path).unwrap();
        let back = Report::read(&path).unwrap();
        assert_eq!(r, back);
        assert_eq!(back.get_f64("test_acc_mean"), Some(0.1 + 0.2));
    }

    #[test]
    fn missing_file_is_an_error() {
        assert!(Report::read(Path::new("/nonexistent/report.txt")).is_err());
    }

    #[test]
    fn malformed_line_names_its_number() {
        let err = Report::from_text(Path::new("r.txt"), "a=1\nnot a record\n")
            .unwrap_err()
            .to_string();
        assert!(err.contains("r.txt:2"), "{err}");
    }

    #[test]
    fn mean_std_matches_hand_values() {
        let (m, s) = mean_std(&[1.0, 2.0, 3.0, 4.0]);
        assert!((m - 2.5).abs() < 1e-15);
        // sample variance of 1..4 is 5/3
        assert!((s - (5.0f64 / 3.0).sqrt()).abs() < 1e-15);
        assert_eq!(mean_std(&[7.0]), (7.0, 0.0));
        assert_eq!(mean_std(&[]), (0.0, 0.0));
    }
}
