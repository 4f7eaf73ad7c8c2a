use thiserror::Error;

/// Failure of a subcommand, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, config keys or values.
    #[error("usage: {0}")]
    Usage(String),

    /// Unreadable or inconsistent inputs, or a library error.
    #[error(transparent)]
    Input(#[from] s2gnn::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    /// A checked property or bound did not hold.
    #[error("violation: {0}")]
    Violation(String),
}

impl CliError {
    /// `0` success, `1` violation, `2` usage or input error.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Violation(_) => 1,
            CliError::Input(s2gnn::Error::Diverged { .. }) => 1,
            _ => 2,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
