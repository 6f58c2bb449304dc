//! Experiment harness for the `cpecs` library: TOML-configured trial batches
//! of COCI and uniform sampling, aggregated into reproducible result files.

pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{Application, ExperimentConfig, Format, Mode};
pub use error::{HarnessError, Result};
pub use experiment::{run_experiment, trial_seed, ExperimentOutcome, Summary, TrialRecord};
pub use output::{emit_results, emit_traces, read_csv, read_json_lines};
