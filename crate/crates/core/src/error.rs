use std::io;
use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Operand dimensions do not agree.
    #[error("shape error: {0}")]
    Shape(String),

    /// Invalid hyper-parameter or configuration value.
    #[error("config error: {0}")]
    Config(String),

    /// API called out of order (e.g. a VJP without retained forward state).
    #[error("usage error: {0}")]
    Usage(String),

    /// A file exists but its contents are malformed.
    #[error("format error in {}: {msg}", path.display())]
    Format { path: PathBuf, msg: String },

    #[error("I/O error at {}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },

    /// NaN/Inf encountered where finite values are required.
    #[error("numerical error: {0}")]
    Numeric(String),
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn format(path: impl Into<PathBuf>, msg: impl Into<String>) -> Self {
        Error::Format {
            path: path.into(),
            msg: msg.into(),
        }
    }

    /// True for errors that originate in the filesystem rather than in the inputs.
    pub fn is_io(&self) -> bool {
        matches!(self, Error::Io { .. } | Error::Format { .. })
    }
}
