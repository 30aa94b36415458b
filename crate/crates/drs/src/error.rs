use std::io;
use std::path::{Path, PathBuf};

use drs_core::{ConfigError, SimError};

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("config error in `{field}`: {message}")]
    Config { field: String, message: String },
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("checkpoint {}: {message}", path.display())]
    Checkpoint { path: PathBuf, message: String },
    #[error("simulation failed: {0}")]
    Sim(SimError),
    #[error("{failed} of {total} sweep replicas failed")]
    Sweep { failed: usize, total: usize },
}

impl CliError {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Self::Config {
            field: field.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_owned(),
            source,
        }
    }

    pub fn checkpoint(path: &Path, message: impl Into<String>) -> Self {
        Self::Checkpoint {
            path: path.to_owned(),
            message: message.into(),
        }
    }

    /// Process exit status: 1 for bad input, 2 when the simulation itself
    /// broke an invariant.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Sim(SimError::Config(_)) => 1,
            Self::Sim(_) | Self::Sweep { .. } => 2,
            Self::Config { .. } | Self::Io { .. } | Self::Checkpoint { .. } => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        Self::Config {
            field: e.field,
            message: e.message,
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Config(c) => c.into(),
            other => Self::Sim(other),
        }
    }
}
