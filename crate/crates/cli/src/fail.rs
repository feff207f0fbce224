//! Process-level error type carrying the exit code contract:
//! 0 success, 2 bad configuration or arguments, 3 numeric/degeneracy abort,
//! 4 I/O failure.

use qdiff_core::Error as CoreError;

#[derive(Debug, thiserror::Error)]
pub enum Failure {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("numeric abort: {0}")]
    Numeric(String),

    #[error("i/o error: {0}")]
    Io(String),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Config(_) => 2,
            Failure::Numeric(_) => 3,
            Failure::Io(_) => 4,
        }
    }

    pub fn config(message: impl Into<String>) -> Self {
        Failure::Config(message.into())
    }

    pub fn io(message: impl Into<String>) -> Self {
        Failure::Io(message.into())
    }
}

impl From<CoreError> for Failure {
    fn from(err: CoreError) -> Self {
        match err {
            CoreError::InvalidArgument(msg) => Failure::Config(msg),
            other => Failure::Numeric(other.to_string()),
        }
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::Io(err.to_string())
    }
}

impl From<toml::de::Error> for Failure {
    fn from(err: toml::de::Error) -> Self {
        Failure::Config(err.to_string())
    }
}

impl From<serde_json::Error> for Failure {
    fn from(err: serde_json::Error) -> Self {
        Failure::Config(err.to_string())
    }
}

impl From<csv::Error> for Failure {
    fn from(err: csv::Error) -> Self {
        Failure::Io(err.to_string())
    }
}

pub type CmdResult<T> = std::result::Result<T, Failure>;
