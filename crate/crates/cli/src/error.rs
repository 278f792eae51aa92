use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("unknown experiment `{0}`")]
    UnknownExperiment(String),

    #[error("experiment failed: {0}")]
    Experiment(#[from] genfn_core::Error),

    #[error("i/o error on {path}: {message}")]
    Io { path: String, message: String },
}

impl CliError {
    pub fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            path: path.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, err: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: err.to_string(),
        }
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Experiment(_) => 1,
            CliError::Config { .. } => 2,
            CliError::UnknownExperiment(_) => 3,
            CliError::Io { .. } => 4,
        }
    }

    /// Machine-readable form written to stderr and `error.json`.
    pub fn record(&self) -> ErrorRecord {
        let (error, path) = match self {
            CliError::Config { path, .. } => ("config_error", Some(path.clone())),
            CliError::UnknownExperiment(_) => ("unknown_experiment", None),
            CliError::Experiment(_) => ("experiment_error", None),
            CliError::Io { path, .. } => ("io_error", Some(path.clone())),
        };
        ErrorRecord {
            error,
            path,
            message: self.to_string(),
            exit_code: self.exit_code(),
        }
    }
}

#[derive(Debug, Serialize)]
pub struct ErrorRecord {
    pub error: &'static str,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub path: Option<String>,
    pub message: String,
    pub exit_code: u8,
}

pub type CliResult<T> = std::result::Result<T, CliError>;
