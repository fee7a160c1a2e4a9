//! CLI error type carrying the process exit code.

use std::fmt;

use sage_core::SageError;

/// Failure of a CLI command, bucketed by exit code.
#[derive(Debug)]
pub enum CliError {
    /// Bad arguments or configuration values; exits 64.
    Usage(String),
    /// Missing, unreadable, unwritable, or corrupt files; exits 2.
    Io(String),
    /// Any other runtime failure, such as mismatched dimensions; exits 1.
    Run(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) => 64,
            CliError::Io(_) => 2,
            CliError::Run(_) => 1,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(msg) | CliError::Io(msg) | CliError::Run(msg) => f.write_str(msg),
        }
    }
}

impl std::error::Error for CliError {}

impl From<SageError> for CliError {
    fn from(err: SageError) -> Self {
        match err {
            SageError::InvalidArgument(_) => CliError::Usage(err.to_string()),
            SageError::Io(_) | SageError::Format { .. } => CliError::Io(err.to_string()),
            _ => CliError::Run(err.to_string()),
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(err: std::io::Error) -> Self {
        CliError::Io(err.to_string())
    }
}

impl From<image::ImageError> for CliError {
    fn from(err: image::ImageError) -> Self {
        CliError::Io(err.to_string())
    }
}

pub type Result<T> = std::result::Result<T, CliError>;

/// Annotates an I/O-ish error with the path it concerns.
pub fn at_path(path: &std::path::Path, err: impl fmt::Display) -> CliError {
    CliError::Io(format!("{}: {err}", path.display()))
}
