//! Configuration loading, experiment sweeps and result files behind the
//! `cfsat` command-line tool.

pub mod config;
pub mod experiment;
pub mod output;

pub use config::{load_config, ExperimentKind, ExperimentSpec, RawConfig, Sweep};
pub use experiment::{run_experiment, ExperimentOutcome, PointFailure, ResultRow};
pub use output::{emit_results, OutputFormat};
