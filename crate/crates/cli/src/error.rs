use std::fmt;
use std::io;
use std::path::Path;

use thiserror::Error;

/// Failures that end a command, grouped by exit code.
#[derive(Debug, Error)]
pub enum CliError {
    /// Flags that parse but make no sense together or fall out of range.
    #[error("{0}")]
    Usage(String),
    #[error("{path}: {source}")]
    Io { path: String, source: io::Error },
    /// Grammars, lexicons, alphabets and prior settings.
    #[error("{0}")]
    Grammar(String),
    /// ConfMats, manifests, predictions and gold files.
    #[error("{0}")]
    Data(String),
}

impl CliError {
    pub fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn grammar(path: &Path, e: impl fmt::Display) -> Self {
        Self::Grammar(format!("{}: {e}", path.display()))
    }

    pub fn data(path: &Path, e: impl fmt::Display) -> Self {
        Self::Data(format!("{}: {e}", path.display()))
    }

    pub fn code(&self) -> u8 {
        match self {
            Self::Usage(_) => 1,
            Self::Io { .. } => 2,
            Self::Grammar(_) => 3,
            Self::Data(_) => 4,
        }
    }
}
