//! Error type for the front end, mapping every failure to a process exit
//! code: 0 success, 2 assumption violation, 3 resource refusal, 64 usage,
//! 74 input/output.

use std::fmt;

#[derive(Debug)]
pub enum CliError {
    /// An error bubbled up from the core library.
    Core(fpp_core::Error),
    /// Filesystem trouble, tagged with the path involved.
    Io { path: String, source: std::io::Error },
    /// A data file exists but does not have the expected shape.
    Format(String),
}

pub type CliResult<T> = Result<T, CliError>;

impl CliError {
    pub fn io(path: impl Into<String>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Core(fpp_core::Error::config(msg))
    }

    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Core(fpp_core::Error::Assumption(_)) => 2,
            CliError::Core(fpp_core::Error::Resource(_)) => 3,
            CliError::Core(fpp_core::Error::Config(_) | fpp_core::Error::Domain(_)) => 64,
            CliError::Io { .. } | CliError::Format(_) => 74,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io { path, source } => write!(f, "i/o error on {path}: {source}"),
            CliError::Format(msg) => write!(f, "format error: {msg}"),
        }
    }
}

impl From<fpp_core::Error> for CliError {
    fn from(e: fpp_core::Error) -> Self {
        CliError::Core(e)
    }
}
