//! Experiment runner: reads a TOML config, runs one pipeline, writes CSV and
//! JSON with provenance.

pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use config::{Command, ExperimentConfig};
pub use error::{CliError, CliResult};
