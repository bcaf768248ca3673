use thiserror::Error;

/// Unified error type for the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the mathematical domain of an operation
    /// (log branch point, out-of-range grade, non-unit rotation plane, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A geometric construction degenerated to (numerically) zero.
    #[error("degenerate {what}: {detail}")]
    Degenerate { what: &'static str, detail: String },

    /// A typed multivector carried a nonzero coefficient outside its
    /// declared blade set.
    #[error("blade contract violation: {0}")]
    Contract(String),

    /// A numerical procedure failed (singular solve, non-PD Hessian, ...).
    #[error("numerical failure: {0}")]
    Numerical(String),

    /// Robot description / experiment configuration problems.
    #[error("configuration error: {0}")]
    Config(String),

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
