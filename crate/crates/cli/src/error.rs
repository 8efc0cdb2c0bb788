//! CLI error categories mapped to exit codes: 2 input, 3 state, 4 internal.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// Bad or missing input data / configuration (exit 2).
    Input(String),
    /// Required prior runs or trained artifacts are missing (exit 3).
    State(String),
    /// Everything else (exit 4).
    Internal(String),
}

impl CliError {
    pub fn input(err: impl fmt::Display) -> Self {
        CliError::Input(err.to_string())
    }

    pub fn state(err: impl fmt::Display) -> Self {
        CliError::State(err.to_string())
    }

    pub fn internal(err: impl fmt::Display) -> Self {
        CliError::Internal(err.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::State(_) => 3,
            CliError::Internal(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Input(msg) => write!(f, "input error: {msg}"),
            CliError::State(msg) => write!(f, "state error: {msg}"),
            CliError::Internal(msg) => write!(f, "error: {msg}"),
        }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
