//! Checkpoint container: all model tensors with shapes, plus the run
//! configuration needed to rebuild the propagation structure.
//!
//! Serialized as JSON. `f64` values survive the trip bit-exactly
//! (shortest-round-trip formatting on write, exact parse on read), so
//! save/load is an identity on parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use simp_gcn_core::model::{LayerParams, ModelParams, SslHead};
use simp_gcn_core::train::{Mode, TrainConfig};
use simp_gcn_core::Dense;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct TensorCk {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl TensorCk {
    fn from_dense(d: &Dense) -> Self {
        TensorCk { rows: d.rows(), cols: d.cols(), data: d.data().to_vec() }
    }

    fn to_dense(&self) -> Result<Dense> {
        if self.data.len() != self.rows * self.cols {
            return Err(CliError::Invalid(format!(
                "checkpoint tensor: {}x{} shape disagrees with {} values",
                self.rows,
                self.cols,
                self.data.len()
            )));
        }
        Ok(Dense::from_vec(self.rows, self.cols, self.data.clone()))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct LayerCk {
    pub w: TensorCk,
    pub w_s: Vec<f64>,
    pub b_s: f64,
    pub w_k: Vec<f64>,
    pub b_k: f64,
}

/// Training configuration as persisted alongside the tensors.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct ConfigCk {
    pub lr: f64,
    pub weight_decay: f64,
    pub dropout: f64,
    pub epochs: usize,
    pub patience: Option<usize>,
    pub hidden: usize,
    pub k: usize,
    pub m: usize,
    pub lambda: f64,
    pub gamma: f64,
    pub b_s_init: f64,
    pub seed: u64,
}

impl ConfigCk {
    pub fn from_config(c: &TrainConfig) -> Self {
        ConfigCk {
            lr: c.lr,
            weight_decay: c.weight_decay,
            dropout: c.dropout,
            epochs: c.epochs,
            patience: c.patience,
            hidden: c.hidden,
            k: c.k,
            m: c.m,
            lambda: c.lambda,
            gamma: c.gamma,
            b_s_init: c.b_s_init,
            seed: c.seed,
        }
    }

    pub fn to_config(&self) -> TrainConfig {
        TrainConfig {
            lr: self.lr,
            weight_decay: self.weight_decay,
            dropout: self.dropout,
            epochs: self.epochs,
            patience: self.patience,
            hidden: self.hidden,
            k: self.k,
            m: self.m,
            lambda: self.lambda,
            gamma: self.gamma,
            b_s_init: self.b_s_init,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct Checkpoint {
    pub dataset: String,
    /// One of `simp`, `gcn`, `knn-gcn`, `a-plus-knn-gcn`.
    pub mode: String,
    pub config: ConfigCk,
    pub layers: Vec<LayerCk>,
    pub ssl_w: Vec<f64>,
    pub ssl_b: f64,
    pub gamma: f64,
    pub lambda: f64,
}

pub fn parse_mode(s: &str) -> Result<Mode> {
    match s {
        "simp" => Ok(Mode::Simp),
        "gcn" => Ok(Mode::Gcn),
        "knn-gcn" => Ok(Mode::KnnGcn),
        "a-plus-knn-gcn" => Ok(Mode::APlusKnnGcn),
        other => Err(CliError::Invalid(format!("unknown mode {other:?}"))),
    }
}

impl Checkpoint {
    pub fn new(
        dataset: &str,
        mode: Mode,
        config: &TrainConfig,
        params: &ModelParams,
    ) -> Self {
        Checkpoint {
            dataset: dataset.to_string(),
            mode: mode.as_str().to_string(),
            config: ConfigCk::from_config(config),
            layers: params
                .layers
                .iter()
                .map(|l| LayerCk {
                    w: TensorCk::from_dense(&l.w),
                    w_s: l.w_s.clone(),
                    b_s: l.b_s,
                    w_k: l.w_k.clone(),
                    b_k: l.b_k,
                })
                .collect(),
            ssl_w: params.ssl_head.w.clone(),
            ssl_b: params.ssl_head.b,
            gamma: params.gamma,
            lambda: params.lambda,
        }
    }

    pub fn mode(&self) -> Result<Mode> {
        parse_mode(&self.mode)
    }

    pub fn to_params(&self) -> Result<ModelParams> {
        let layers = self
            .layers
            .iter()
            .map(|l| {
                Ok(LayerParams {
                    w: l.w.to_dense()?,
                    w_s: l.w_s.clone(),
                    b_s: l.b_s,
                    w_k: l.w_k.clone(),
                    b_k: l.b_k,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(ModelParams {
            layers,
            ssl_head: SslHead { w: self.ssl_w.clone(), b: self.ssl_b },
            gamma: self.gamma,
            lambda: self.lambda,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_string_pretty(self)
            .map_err(|e| CliError::Invalid(format!("checkpoint serialization: {e}")))?;
        fs::write(path, json).map_err(|e| CliError::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::parse(path, e.line(), format!("bad checkpoint: {e}")))
    }
}
