use msef_core::model::ModelError;
use msef_core::stats::StatsError;
use msef_data::DataError;
use thiserror::Error;

/// Errors carry the exit code class: bad inputs are the user's, everything
/// else is ours.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    User(String),
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::User(_) => 1,
            Self::Internal(_) => 2,
        }
    }

    pub fn user(msg: impl Into<String>) -> Self {
        Self::User(msg.into())
    }

    pub fn internal(msg: impl Into<String>) -> Self {
        Self::Internal(msg.into())
    }
}

impl From<DataError> for CliError {
    fn from(e: DataError) -> Self {
        Self::User(e.to_string())
    }
}

impl From<ModelError> for CliError {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::Checkpoint(_) | ModelError::Config(_) => Self::User(e.to_string()),
            _ => Self::Internal(e.to_string()),
        }
    }
}

impl From<StatsError> for CliError {
    fn from(e: StatsError) -> Self {
        Self::Internal(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        Self::Internal(format!("serialization failed: {e}"))
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
