//! Node-similarity-preserving graph convolution.
//!
//! This crate implements a two-layer graph convolutional model whose
//! propagation matrix adaptively mixes the normalized original graph with a
//! normalized kNN graph built from node-feature cosine similarity, adds
//! per-node learnable self-loops, and trains jointly on a classification loss
//! and a self-supervised pairwise-similarity regression loss:
//!
//! ```text
//! P^(l)  = s^(l) * D~^{-1/2} A~ D~^{-1/2} + (1 - s^(l)) * Df^{-1/2} Af Df^{-1/2}
//! P~^(l) = P^(l) + gamma * diag(K^(l))
//! H^(l)  = act(P~^(l) H^(l-1) W^(l))
//! L      = L_class + lambda * L_self
//! ```
//!
//! The crate is `no_std`-compatible (`alloc` required); IO, file formats and
//! the CLI live in the companion `simp-gcn` crate. All math is plain `f64`
//! with fixed reduction order, so results are bitwise reproducible for a
//! fixed seed regardless of thread count.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;

pub mod error;
pub mod grad;
pub mod graph;
pub mod matrix;
pub mod model;
pub mod optim;
pub mod rng;
pub mod sim;
pub mod train;

pub use error::Error;
pub use grad::{backward, finite_diff_check, FiniteDiffReport, LossInputs};
pub use graph::{Propagator, SparseGraph};
pub use matrix::Dense;
pub use model::{ForwardTrace, LayerParams, ModelParams, Propagation, SslHead};
pub use optim::{adam_step, AdamState, GradientSet};
pub use sim::PairSet;
pub use train::{Mode, Split, TrainConfig, TrainHistory};

/// Result alias used throughout the crate.
pub type Result<T> = core::result::Result<T, Error>;
