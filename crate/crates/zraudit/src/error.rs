//! Crate-wide error type.

use thiserror::Error;

/// Errors produced by auditing, estimation and IO routines.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument fell outside its mathematical domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A trade-off composition was requested for an unsupported pair of families.
    #[error("unsupported composition: {0}")]
    UnsupportedPair(String),

    /// Inconsistent or invalid inputs (dimension mismatches, missing fields, bad counts).
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A configuration that can never produce a valid audit.
    #[error("configuration error: {0}")]
    Config(String),

    /// Training data contained a single class where both are required.
    #[error("single-class data: {0}")]
    SingleClass(String),

    /// Non-finite value where a finite one is required.
    #[error("non-finite value: {0}")]
    NonFinite(String),

    /// Empirical-bound search detected a non-monotone rejection pattern.
    #[error("non-monotone audit: rejected at upper bracket {hi} but not at lower bracket {lo}")]
    NonMonotone { lo: f64, hi: f64 },

    /// A record file violated the expected schema.
    #[error("schema error: {0}")]
    Schema(String),

    #[error("io error: {0}")]
    Io(#[from] std::io::Error),

    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),

    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
