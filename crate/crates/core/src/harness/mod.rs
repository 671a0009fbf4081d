//! Experiment runner: configuration, batch trials, replays and reports.

mod config;
mod replay;
mod report;
mod run;

pub use config::{ExperimentConfig, OutputFormat, Overrides, SourceConfig, SourceState};
pub use replay::{run_replay, ReplayFile, ReplayReport, ReplayRow};
pub use report::{emit_replay, emit_report, report_string, CSV_HEADER, REPLAY_CSV_HEADER};
pub use run::{run_experiment, run_session, run_trial, Aggregate, MeanStd, RunReport, TrialSummary, VERSION};
