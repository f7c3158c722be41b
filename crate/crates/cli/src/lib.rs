//! Experiment harness around the `gridsched` library: config loading, CSV
//! trace ingestion, synthetic trace generators, a batch simulation runner,
//! and plot-ready report emission.

pub mod config;
pub mod experiment;
pub mod report;
pub mod synth;
pub mod trace_io;

pub use config::{ConfigError, ExperimentConfig, Overrides};
pub use experiment::{run_experiment, CliError, Report, RunRow};
pub use report::{bounds_csv, emit_report, report_json, runs_csv};
pub use synth::{synthesize_trace, TraceKind};
pub use trace_io::{load_trace, parse_trace, trace_to_csv, write_trace, TraceIoError};
