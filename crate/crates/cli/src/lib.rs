//! Experiment commands behind the `sisctl` binary.
//!
//! Each command reads an [`ExperimentConfig`], fans the (strategy, seed)
//! runs out over a worker pool and writes CSV files whose first line is
//! `# config_digest=<hex>`. Identical configs give byte-identical files.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::ExperimentConfig;
pub use error::{CliError, Result};
