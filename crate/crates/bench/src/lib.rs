//! Benchmark harness and command-line front end for the `qf-core` solvers.

pub mod cli;
pub mod config;
pub mod error;
pub mod harness;
pub mod plot;

pub use config::ExperimentSpec;
pub use error::{BenchError, Result};
pub use harness::{read_records, run_experiment, BenchRecord, ExperimentOutcome, RunFailure};
pub use plot::{emit_plots, energy_groups, runtime_groups};
