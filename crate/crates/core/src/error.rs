//! Error type shared by every module of the core crate.

use thiserror::Error;

/// Errors raised by the contagion toolkit.
#[derive(Debug, Error)]
pub enum Error {
    /// An input lies outside the mathematical domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Arguments are inconsistent with each other (lengths, labels, formats).
    #[error("argument error: {0}")]
    Argument(String),

    /// The model cannot generate any randomness or default (all rates zero).
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// Kendall's tau is undefined, e.g. one series is constant.
    #[error("undefined Kendall tau for pair ({first}, {second}): {reason}")]
    UndefinedTau {
        first: String,
        second: String,
        reason: String,
    },

    /// A tau matrix carries no defined off-diagonal entry.
    #[error("unfittable target: {0}")]
    Unfittable(String),

    /// Nested structure violates the inner >= outer parameter order.
    #[error("nesting constraint violated: inner theta {theta} < outer phi {phi}")]
    Nesting { theta: f64, phi: f64 },

    /// Every entity was excluded from the systemic-intensity extraction.
    #[error("extraction error: {0}")]
    Extraction(String),

    /// Not enough aligned data survived ingestion.
    #[error("insufficient aligned data: {entities} entities and {dates} dates (need at least 2 and {min_dates})")]
    InsufficientData {
        entities: usize,
        dates: usize,
        min_dates: usize,
    },

    /// Malformed input file content.
    #[error("parse error at line {line}: {message}")]
    Parse { line: usize, message: String },

    /// Adaptive quadrature failed to reach its tolerance.
    #[error("quadrature did not converge{context}: estimate {value}, error {error:e} after {intervals} intervals")]
    Quadrature {
        value: f64,
        error: f64,
        intervals: usize,
        context: String,
    },

    /// Two independent evaluation routes disagree.
    #[error("internal consistency failure: {first} vs {second} (difference {difference:e})")]
    Consistency {
        first: f64,
        second: f64,
        difference: f64,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

pub(crate) fn argument<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
