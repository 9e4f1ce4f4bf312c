//! Batch experiment runner for `lcfix-core`: TOML configs in, CSV and JSON
//! reports out.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod battery;
pub mod compare;
pub mod config;
pub mod error;
pub mod report;
pub mod runner;
pub mod suite;

pub use config::{load_config, ExperimentConfig, Mode};
pub use error::RunError;
pub use runner::{run_experiment, RunOutcome, RunStatus};
