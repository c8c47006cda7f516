use std::path::Path;

use thiserror::Error;

use cfic_core::decoder::ExtractError;
use cfic_core::eval::DatasetError;
use cfic_core::oracle::OracleError;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("config error: {0}")]
    Config(String),
    #[error("io error: {path}: {message}")]
    Io { path: String, message: String },
    #[error("oracle error: {0}")]
    Oracle(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("{stage} stage failed: {message}")]
    Stage {
        stage: &'static str,
        message: String,
    },
}

impl CliError {
    pub fn io(path: &Path, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Io { .. } => 3,
            CliError::Oracle(_) => 4,
            CliError::Parse(_) => 5,
            CliError::Stage { .. } => 1,
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        CliError::Oracle(e.to_string())
    }
}

impl From<ExtractError> for CliError {
    fn from(e: ExtractError) -> Self {
        match e.oracle_error() {
            Some(o) => CliError::Oracle(format!("{} stage: {o}", e.stage())),
            None => match e {
                ExtractError::Segment(d) => CliError::Parse(format!("segment stage: {d}")),
                other => CliError::Stage {
                    stage: other.stage(),
                    message: other.to_string(),
                },
            },
        }
    }
}

impl From<DatasetError> for CliError {
    fn from(e: DatasetError) -> Self {
        match e {
            DatasetError::Io { path, source } => CliError::Io {
                path,
                message: source.to_string(),
            },
            DatasetError::Parse { .. } => CliError::Parse(e.to_string()),
        }
    }
}
