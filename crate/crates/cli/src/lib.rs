//! Configuration, dispatch and report emission for the `thermoshift` binary.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod output;
pub mod runner;

pub use config::{load_config, ConfigError, SystemConfig, SystemSpec};
pub use output::to_json;
pub use runner::{run_command, Command, RunError, RunOptions, RunReport};
