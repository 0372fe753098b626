//! Paired-trial benchmark of the agent and the baseline across scenarios:
//! success rate, touchdown precision and drone/pad speed correlation.

mod report;
mod runner;
mod stats;

pub use report::{
    read_trials_csv, trace_file_name, write_run, write_trials_csv, BenchmarkReport, ReportCell, TRIALS_HEADER,
};
pub use runner::{
    run_benchmark, run_trial, BenchmarkRun, BenchmarkSetup, Controller, ControllerKind, TrialResult,
};
pub use stats::{mean, median, population_std, velocity_correlation, Summary};
