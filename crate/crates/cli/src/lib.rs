//! Experiment driver: config parsing, subcommand dispatch and CSV output.

pub mod cache;
pub mod config;
pub mod run;

pub use config::{ConfigError, RunConfig};
pub use run::{run_experiment, RunError, RunReport, Subcommand};
