use thiserror::Error;

/// Failure of a CLI run, mapped onto the process exit code.
#[derive(Debug, Error)]
pub enum CliError {
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Core(#[from] degenwave_core::Error),

    #[error("invariant check failed: {}", .0.join(", "))]
    Invariant(Vec<String>),
}

impl CliError {
    /// 2 for bad input, 1 for everything detected during computation.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) | CliError::Io { .. } => 2,
            CliError::Core(degenwave_core::Error::InvalidParams(_)) => 2,
            CliError::Core(_) | CliError::Invariant(_) => 1,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
