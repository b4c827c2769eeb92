use std::fmt;

use wda::Error;

/// Failure classes, one per exit code.
#[derive(Debug)]
pub enum CliError {
    /// Problem text could not be parsed or validated.
    Parse(String),
    /// Flags are inconsistent or name something that does not exist.
    Config(String),
    /// Solver, monitor or I/O failure after a valid setup.
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Parse(_) => 1,
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }

    /// Classify a core error raised while interpreting user input.
    pub fn from_setup(e: Error) -> Self {
        match e {
            Error::Parse { .. } | Error::Validation { .. } | Error::EqualityNotAffine { .. } => {
                CliError::Parse(e.to_string())
            }
            _ => CliError::Config(e.to_string()),
        }
    }

    pub fn runtime(e: impl fmt::Display) -> Self {
        CliError::Runtime(e.to_string())
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Parse(m) => write!(f, "{m}"),
            CliError::Config(m) => write!(f, "invalid configuration: {m}"),
            CliError::Runtime(m) => write!(f, "{m}"),
        }
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
