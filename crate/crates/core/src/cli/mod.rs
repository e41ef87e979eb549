//! Experiment configs, convergence runs and reports.

mod commands;
mod config;
mod report;
mod run;
mod validate;

pub use config::{
    parse_config, AdaptiveTarget, EtaConfig, ExperimentConfig, NormKind, OutputConfig, ReportFormat, Tolerances,
};
pub use report::{emit_report, parse_jsonl, render_report, ReportHeader};
pub use run::{build_schedules, run_convergence, ConvergenceReport, NormError, PrecheckRecord, ReportRow, RunOptions};
pub use validate::{brute_checks, catalog, collapse_check, geometry_checks, smooth_bump, validation_suite};
pub use commands::{execute, exit_code, main_with_args, Cli, Command, CommonArgs, Outcome, EXIT_IO, EXIT_OK, EXIT_PRECONDITION, EXIT_VALIDATION};
