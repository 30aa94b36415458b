//! Command-line driver for `drs-core`: JSON configs with overrides, run
//! manifests, JSONL step logs, CSV metric tables, Q-table checkpoints and
//! parallel parameter sweeps.

pub mod checkpoint;
pub mod cli;
pub mod commands;
pub mod config;
pub mod error;
pub mod output;

pub use error::CliError;
