use thiserror::Error;

/// Errors produced by the numerical machinery.
#[derive(Debug, Error)]
pub enum Error {
    /// An argument is outside the mathematical domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// Requested sizes or parameters are inconsistent.
    #[error("configuration error: {0}")]
    Config(String),

    /// A matrix or grid could not be assembled.
    #[error("construction error: {0}")]
    Construction(String),

    /// Vector/matrix sizes do not match.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    Dimension { expected: usize, got: usize },

    /// A denominator or pivot is too small to trust the result.
    #[error("numerical degeneracy: {0}")]
    Degeneracy(String),

    /// No turning point could be located on the sampled profile.
    #[error("classification failure: {0}")]
    Classification(String),
}

pub type Result<T> = std::result::Result<T, Error>;
