//! Experiment driver behind the `hvloss` binary: configuration files, the
//! subcommands and their CSV output.

pub mod commands;
pub mod config;
pub mod output;

pub use commands::{
    cmd_compare, cmd_gradcheck, cmd_pareto_demo, cmd_train, CompareReport, ParetoDemoOptions,
    ParetoReport,
};
pub use config::{DataSource, ExperimentConfig, ObjectiveSelection};
