//! Experiment front end: configuration, subcommands and file formats.

pub mod commands;
pub mod config;
pub mod metrics;

pub use commands::{
    cmd_baseline, cmd_eval, cmd_sweep_epsilon, cmd_train, BaselineKind, EvalReport, TrainReport,
};
pub use config::{ConfigError, ExperimentConfig, DESK_SCALE_OVERRIDES};
pub use metrics::SweepRow;
