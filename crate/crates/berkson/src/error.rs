//! Error type shared by all modules.

use thiserror::Error;

/// Errors produced by model construction, numerical evaluation, and optimization.
#[derive(Error, Debug, Clone, PartialEq)]
pub enum BerksonError {
    /// A covariance matrix failed the symmetric positive-definite check.
    #[error("invalid covariance: {0}")]
    InvalidCovariance(String),

    /// Vector or matrix dimensions do not agree.
    #[error("shape mismatch: expected {expected}, got {got}")]
    ShapeMismatch { expected: String, got: String },

    /// Mixture weights are out of range or do not sum to 1 within tolerance.
    #[error("invalid mixture weights: {0}")]
    InvalidWeights(String),

    /// A sample of size zero was requested or supplied.
    #[error("empty sample")]
    EmptySample,

    /// Both the smoothing and the error covariance are zero; the model has no density.
    #[error("degenerate model: {0}")]
    DegenerateModel(String),

    /// The estimator covariance S + Σ_ε is singular.
    #[error("degenerate estimator: smoothing plus error covariance is singular")]
    DegenerateEstimator,

    /// The operation is defined only for a specific dimension.
    #[error("unsupported dimension: {0}")]
    UnsupportedDimension(String),

    /// An argument is outside the operation's domain.
    #[error("domain error: {0}")]
    Domain(String),

    /// A spectral integral diverges (error density not square integrable).
    #[error("divergent integral: {0}")]
    DivergentIntegral(String),

    /// The scalar minimizer still sits on the bracket edge after expansion.
    #[error("bracket exhausted: minimum at edge of [{lo}, {hi}]")]
    BracketExhausted { lo: f64, hi: f64 },

    /// A linear system is too ill-conditioned to solve reliably.
    #[error("conditioning failure: {0}")]
    Conditioning(String),

    /// An input record was rejected (row index is 1-based, excluding the header).
    #[error("record rejected at row {row}: {reason}")]
    RecordRejected { row: usize, reason: String },
}

pub type Result<T> = std::result::Result<T, BerksonError>;
