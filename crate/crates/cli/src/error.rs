//! Error type for IO, parsing and command validation.

use std::fmt;
use std::path::PathBuf;

#[derive(Debug)]
pub enum CliError {
    /// Underlying filesystem failure, tagged with the path involved.
    Io { path: PathBuf, source: std::io::Error },
    /// Malformed text in a data/report file; `line` is 1-based.
    Parse { path: PathBuf, line: usize, msg: String },
    /// Numerical/model error from the core library.
    Core(simp_gcn_core::Error),
    /// Bad flag combination or unknown name.
    Invalid(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Io { path, source } => write!(f, "{}: {source}", path.display()),
            CliError::Parse { path, line, msg } => {
                write!(f, "{}:{line}: {msg}", path.display())
            }
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Invalid(msg) => write!(f, "{msg}"),
        }
    }
}

impl std::error::Error for CliError {
    fn source(&self) -> Option<&(dyn std::error::Error + 'static)> {
        match self {
            CliError::Io { source, .. } => Some(source),
            CliError::Core(e) => Some(e),
            _ => None,
        }
    }
}

impl From<simp_gcn_core::Error> for CliError {
    fn from(e: simp_gcn_core::Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        CliError::Io { path: path.into(), source }
    }

    pub fn parse(path: impl Into<PathBuf>, line: usize, msg: impl Into<String>) -> Self {
        CliError::Parse { path: path.into(), line, msg: msg.into() }
    }
}

pub type Result<T> = std::result::Result<T, CliError>;
