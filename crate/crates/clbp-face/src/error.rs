//! Error type shared by all modules of the crate.

use std::path::PathBuf;

use thiserror::Error;

/// Errors produced by image decoding, dataset loading, feature extraction,
/// classification, and evaluation.
#[derive(Debug, Error)]
pub enum Error {
    /// A PGM header or payload could not be decoded. `field` names the part
    /// of the file that failed (`magic`, `width`, `height`, `maxval`,
    /// `payload`).
    #[error("pgm parse error in {field}: {message}")]
    PgmParse {
        field: &'static str,
        message: String,
    },

    /// Filesystem access failed for `path`.
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    /// A dataset violated its layout or labeling contract.
    #[error("dataset error: {0}")]
    Dataset(String),

    /// An argument was outside its documented domain.
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Two containers that must agree in length or shape did not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// A numeric input or intermediate was non-finite or degenerate.
    #[error("numerical error: {0}")]
    Numerical(String),

    /// A feature cache file was malformed or inconsistent with its header.
    #[error("feature cache error: {0}")]
    Cache(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;
