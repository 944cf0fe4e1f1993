//! Command-line errors and their exit codes.

use thiserror::Error;

/// Exit code for configuration and input errors.
pub const EXIT_INPUT: i32 = 2;
/// Exit code for numerical aborts.
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Error)]
pub enum CliError {
    /// A file did not follow its format.
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },

    /// A well-formed file in a variant that is not supported.
    #[error("unsupported format: {0}")]
    Unsupported(String),

    #[error("{path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },

    /// Flags or a configuration file failed validation.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// Training or analysis stopped on a non-finite value.
    #[error("numerical abort: {0}")]
    Numerical(String),

    /// A replayed run did not reproduce its recorded result.
    #[error("replay mismatch: {0}")]
    Mismatch(String),
}

impl CliError {
    pub fn parse(offset: usize, message: impl Into<String>) -> Self {
        CliError::Parse {
            offset,
            message: message.into(),
        }
    }

    pub fn io(path: impl AsRef<std::path::Path>, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.as_ref().display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) | CliError::Mismatch(_) => EXIT_NUMERICAL,
            _ => EXIT_INPUT,
        }
    }
}

impl From<coordfit::Error> for CliError {
    fn from(e: coordfit::Error) -> Self {
        match e {
            coordfit::Error::NonFinite(_)
            | coordfit::Error::Singular(_)
            | coordfit::Error::NoConvergence { .. }
            | coordfit::Error::LineSearch(_) => CliError::Numerical(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
