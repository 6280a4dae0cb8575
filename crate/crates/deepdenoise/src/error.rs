use std::io;
use std::path::PathBuf;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("usage: {0}")]
    Usage(String),
    #[error("data: {0}")]
    Data(String),
    /// Malformed or unsupported image bytes.
    #[error("codec: {path}: {message} (byte offset {offset})")]
    Codec {
        path: PathBuf,
        offset: usize,
        message: String,
    },
    #[error("contract: {0}")]
    Contract(String),
    /// Model or corpus files that fail validation.
    #[error("persistence: {0}")]
    Persistence(String),
    #[error("io: {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
}

impl Error {
    /// Process exit status for this error.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::Io { .. } => 1,
            Error::Usage(_) => 2,
            Error::Data(_) => 3,
            Error::Codec { .. } => 4,
            Error::Contract(_) => 5,
            Error::Persistence(_) => 6,
        }
    }

    /// Short lower-case tag used in report rows.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Io { .. } => "io",
            Error::Usage(_) => "usage",
            Error::Data(_) => "data",
            Error::Codec { .. } => "codec",
            Error::Contract(_) => "contract",
            Error::Persistence(_) => "persistence",
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

impl From<deepdenoise_core::Error> for Error {
    fn from(e: deepdenoise_core::Error) -> Self {
        match e {
            deepdenoise_core::Error::Data(_) => Error::Data(e.to_string()),
            _ => Error::Contract(e.to_string()),
        }
    }
}
