//! Dataset IO, splits, checkpoints, reports and experiment orchestration
//! around the `simp-gcn-core` numerics. The `simp-gcn` binary in this crate
//! exposes the commands; everything here is library code so the behavior is
//! testable without spawning processes.

pub mod checkpoint;
pub mod dataset;
pub mod error;
pub mod presets;
pub mod report;
pub mod run;
pub mod split;

pub use checkpoint::Checkpoint;
pub use dataset::{load_dataset, write_dataset, Dataset};
pub use error::{CliError, Result};
pub use report::Report;
