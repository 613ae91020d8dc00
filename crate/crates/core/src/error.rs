use alloc::string::String;

/// Errors produced by the numeric core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// Two planes or series that must agree in shape do not.
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    /// Input too small for the requested scale, window or block size.
    #[error("scale error: {0}")]
    Scale(String),

    /// Input carries no usable signal (flat plane, zero reference energy).
    /// Callers decide the substitute value; see the operation's contract.
    #[error("degenerate input: {0}")]
    DegenerateInput(&'static str),

    /// A matrix that must be symmetric positive semi-definite is not.
    #[error("matrix is not positive semi-definite")]
    NotPositiveSemiDefinite,

    /// Invalid argument value (weights, window lengths, parameters).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    /// An operation that requires data was handed an empty collection.
    #[error("empty input: {0}")]
    Empty(&'static str),

    /// Regression training failed (too few samples, solver did not converge).
    #[error("training error: {0}")]
    Training(String),

    /// Correlation or fitting is undefined for the given data.
    #[error("evaluation error: {0}")]
    Evaluation(String),
}
