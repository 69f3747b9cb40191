//! Experiment harness for the `rsc-saga` solvers.

pub mod config;
pub mod error;
pub mod experiment;
pub mod presets;

pub use config::ExperimentConfig;
pub use error::CliError;
pub use experiment::{emit_csv, run_experiment, RunOptions, Summary};
pub use presets::{preset, preset_names};
