use std::path::PathBuf;

use thiserror::Error;

/// Error type shared by every module in the crate.
///
/// Variants mirror the failure classes of the on-disk formats and the
/// numeric kernels: malformed bytes, wrong shapes/dtypes, bad values,
/// undersized pools, out-of-range parameters, and plain I/O trouble.
#[derive(Debug, Error)]
pub enum Error {
    /// The bytes do not parse as the expected container at all.
    #[error("format error: {0}")]
    Format(String),

    /// The container parsed but its shape, dtype or fields are wrong.
    #[error("schema error: {0}")]
    Schema(String),

    /// Values are structurally valid but semantically unusable
    /// (non-finite entries, zero-norm vectors, duplicates).
    #[error("data error: {0}")]
    Data(String),

    /// A query asked for more than the pool can provide (e.g. k > M).
    #[error("capacity error: {0}")]
    Capacity(String),

    /// A scalar parameter is outside its allowed range.
    #[error("domain error: {0}")]
    Domain(String),

    /// An admixture backend is missing the output for an utterance.
    #[error("missing output for utterance '{utterance}' in backend '{backend}'")]
    MissingOutput { utterance: String, backend: String },

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
