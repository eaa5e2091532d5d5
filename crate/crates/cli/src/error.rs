use std::path::PathBuf;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Data(#[from] csforest::Error),
    #[error("{violations} audit instance(s) violated the strange-set bound")]
    AuditViolation { violations: usize },
}

impl CliError {
    /// 0 success, 1 usage/config, 2 data, 3 audit violation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Config(_) => 1,
            CliError::Data(csforest::Error::Config(_)) => 1,
            CliError::Read { .. } | CliError::Data(_) => 2,
            CliError::AuditViolation { .. } => 3,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Data(csforest::Error::Io(e))
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Data(csforest::Error::Json(e))
    }
}

pub type CliResult<T> = Result<T, CliError>;
