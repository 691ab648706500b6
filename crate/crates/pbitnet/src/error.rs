use thiserror::Error;

/// Errors surfaced by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("input ket is not normalized: |norm - 1| = {0:.3e}")]
    NotNormalized(f64),

    #[error("matrix is not unitary: max |U†U - I| = {0:.3e}")]
    NotUnitary(f64),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("unknown gate name: {0}")]
    UnknownGate(String),

    #[error("gate `{0}` requires an angle parameter")]
    MissingAngle(String),

    #[error("distribution is invalid: {0}")]
    InvalidDistribution(String),

    #[error("negative squared radius {0:.3e} beyond tolerance")]
    NegativeRadius(f64),

    #[error("zero-norm argument in fidelity")]
    ZeroNorm,

    #[error("unitary error undefined: output radius is zero")]
    UndefinedAngle,

    #[error("circuit construction error: {0}")]
    Construction(String),

    #[error("external input length {got} does not match input vertex count {expected}")]
    ExtInputMismatch { expected: usize, got: usize },

    #[error("unsupported qubit count {0} (supported: 1, 2)")]
    UnsupportedQubitCount(usize),

    #[error("estimation window is empty")]
    EmptyWindow,

    #[error("steps budget {budget} is below one segment of {segment} steps")]
    BudgetTooSmall { budget: usize, segment: usize },

    #[error("config error at line {line}: {message}")]
    Config { line: usize, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
