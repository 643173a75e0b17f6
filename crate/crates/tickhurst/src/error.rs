//! Crate-wide error type.

use thiserror::Error;

/// Library error. Variants separate caller mistakes (`Config`), bad input
/// data (`Data`, `Csv`, `Io`), statistically degenerate input (`Degenerate`),
/// and internal invariant breaches (`Internal`).
#[derive(Debug, Error)]
pub enum Error {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("invalid data: {0}")]
    Data(String),
    #[error("degenerate input: {0}")]
    Degenerate(String),
    #[error("internal invariant violated: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
