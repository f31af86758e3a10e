use thiserror::Error;

/// Failures that abort an operation outright. Per-row problems during parsing
/// are reported as [`crate::model::RowError`] values instead and never abort.
#[derive(Debug, Error)]
pub enum Error {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    /// The input stream is not usable as a whole (bad header, undecodable
    /// content, or so many malformed rows that this is likely the wrong file).
    #[error("format error: {0}")]
    Format(String),

    /// The record set violates structural invariants (duplicate ids, parent
    /// cycles). The message lists the offenders.
    #[error("validation error: {0}")]
    Validation(String),

    /// Invalid configuration values (thresholds, rule definitions).
    #[error("config error: {0}")]
    Config(String),

    /// A generator spec that cannot be satisfied without breaking the
    /// clean-background guarantees.
    #[error("generation error: {0}")]
    Generation(String),
}

pub type Result<T> = std::result::Result<T, Error>;
