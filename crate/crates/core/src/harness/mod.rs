//! Experiment plumbing: configuration, parallel execution, output files and the CLI.

pub mod cli;
pub mod config;
pub mod output;
pub mod runner;

pub use config::{Experiment, ExperimentConfig, ProcedureName};
pub use output::{emit_results, SummaryDocument};
pub use runner::{run_monte_carlo, EpisodeRecord, MonteCarloOutput, RegretSummary};
