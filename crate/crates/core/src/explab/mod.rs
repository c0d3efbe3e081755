//! Experiment configs, the claim index, reports and the runner behind the CLI.

pub mod claims;
pub mod config;
pub mod report;
pub mod runner;

pub use config::{ExperimentConfig, Kind};
pub use report::{emit_report, render, Format, Record, Report};
pub use runner::{run_experiment, DEFAULT_SAMPLES};
