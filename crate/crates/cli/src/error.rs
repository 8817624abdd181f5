use thiserror::Error;

/// Exit status for a run that completed but found failed checks.
pub const EXIT_CHECK_FAILURE: i32 = 1;
pub const EXIT_INPUT_ERROR: i32 = 2;
pub const EXIT_NUMERIC: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] qslant_core::Error),

    #[error("{path}: {message}")]
    Io { path: String, message: String },

    #[error("configuration error: {0}")]
    Config(String),
}

impl CliError {
    pub fn io(path: impl AsRef<std::path::Path>, e: impl std::fmt::Display) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            message: e.to_string(),
        }
    }

    pub fn code(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.code(),
            CliError::Io { .. } => "io_error",
            CliError::Config(_) => "configuration_error",
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(e) if e.is_numeric_instability() => EXIT_NUMERIC,
            CliError::Core(qslant_core::Error::Structural(_)) => EXIT_NUMERIC,
            _ => EXIT_INPUT_ERROR,
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
