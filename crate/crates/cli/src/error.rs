use thiserror::Error;

/// Failure of a command. The variant decides the exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags or bad input data; exit code 1.
    #[error("{0}")]
    User(String),
    /// A bug or an environment failure we could not attribute to the input; exit code 2.
    #[error("internal error: {0}")]
    Internal(String),
}

impl CliError {
    pub fn user(msg: impl std::fmt::Display) -> Self {
        CliError::User(msg.to_string())
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::User(_) => 1,
            CliError::Internal(_) => 2,
        }
    }
}

pub type CliResult<T> = Result<T, CliError>;
