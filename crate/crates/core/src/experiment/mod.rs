//! Config-driven experiment grid: cross-validated cells, transfer jobs and the
//! files they produce.

pub mod config;
pub mod runner;

pub use config::{validate_config, ExperimentConfig, Overrides};
pub use runner::{run_experiment, RunSummary};
