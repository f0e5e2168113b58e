use std::path::PathBuf;

use thiserror::Error;
use wulff_core::FlowError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config: {0}")]
    Config(String),

    #[error("config field `{field}`: {message}")]
    Field { field: &'static str, message: String },

    #[error("{path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("numeric state at t = {numeric} compared with reference at t = {reference}")]
    TimeMismatch { numeric: f64, reference: f64 },

    #[error(transparent)]
    Flow(#[from] FlowError),
}

impl HarnessError {
    pub fn field(field: &'static str, message: impl Into<String>) -> Self {
        HarnessError::Field { field, message: message.into() }
    }

    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.into(), source }
    }

    /// 2 for configuration problems, 3 for everything that fails at run time.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) | HarnessError::Field { .. } => 2,
            _ => 3,
        }
    }
}

pub type Result<T, E = HarnessError> = std::result::Result<T, E>;
