//! Error types shared across the crate.
//!
//! Every fallible operation returns [`enum@Error`]; the variants map onto the
//! failure categories of the public contract (size, index, kind, shape,
//! domain, geometry, aliasing, degenerate input, insufficient data,
//! diagnostic, config, I/O). The CLI prints `error[<category>]: <message>`
//! so scripts can dispatch on the category without parsing prose.

use std::path::PathBuf;

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

/// Unified error type for construction, propagation, analysis, and I/O.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    /// A requested Hilbert-space size is outside the supported range.
    #[error("system size out of range: {0}")]
    Size(String),

    /// A site or matrix index is out of bounds.
    #[error("index out of range: {0}")]
    Index(String),

    /// An operator does not have the kind (hermitian/unitary) required here.
    #[error("operator kind mismatch: {0}")]
    Kind(String),

    /// Matrix dimensions do not match.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A scalar parameter is outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// Invalid geometry in a coupling model (e.g. coincident spin positions).
    #[error("geometry error: {0}")]
    Geometry(String),

    /// A phase grid too coarse to resolve all coherence orders was requested.
    #[error("aliasing error: {0}")]
    Aliasing(String),

    /// An input is degenerate (e.g. an all-zero spectrum has no width).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// Not enough data points for the requested analysis.
    #[error("insufficient data: {0}")]
    InsufficientData(String),

    /// A numerical self-check failed (diagnostics are never silently dropped).
    #[error("diagnostic failure: {0}")]
    Diagnostic(String),

    /// Configuration file rejected during validation.
    #[error("config error: {0}")]
    Config(String),

    /// Filesystem failure, tagged with the offending path.
    #[error("i/o error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    /// Stable one-word category used by the CLI error formatting.
    pub fn category(&self) -> &'static str {
        match self {
            Error::Size(_) => "size",
            Error::Index(_) => "index",
            Error::Kind(_) => "kind",
            Error::Shape(_) => "shape",
            Error::Domain(_) => "domain",
            Error::Geometry(_) => "geometry",
            Error::Aliasing(_) => "aliasing",
            Error::Degenerate(_) => "degenerate",
            Error::InsufficientData(_) => "insufficient-data",
            Error::Diagnostic(_) => "diagnostic",
            Error::Config(_) => "config",
            Error::Io { .. } => "io",
        }
    }

    /// Convenience constructor for I/O errors carrying their path.
    pub fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io { path: path.into(), source }
    }
}
