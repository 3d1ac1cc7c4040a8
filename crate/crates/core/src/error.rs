use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("matrix is not Hermitian: ||M - M^H|| = {residual:e} exceeds {bound:e}")]
    NotHermitian { residual: f64, bound: f64 },
    #[error("eigensolver failed to converge on a matrix of order {0}")]
    NoConvergence(usize),
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("only one or two copies are supported, got {0}")]
    UnsupportedCopies(usize),
    #[error("local dimension {d} exceeds the oracle cap of {max}")]
    DimensionTooLarge { d: usize, max: usize },
    #[error("matrix is not unitary: ||A^H A - I|| = {0:e}")]
    NotUnitary(f64),
    #[error("mixing matrix is singular: |det| = {0:e}")]
    SingularLambda(f64),
    #[error("index out of range: {0}")]
    IndexError(String),
    #[error("block decomposition mismatch: residual {residual:e} exceeds {bound:e}")]
    DecompositionMismatch { residual: f64, bound: f64 },
    #[error("no generic path found after {0} attempts")]
    GenericityLost(usize),
    #[error("continuation refinement reached depth {depth} near t = {t}")]
    CertificationInconclusive { depth: usize, t: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("invalid JSON input: {0}")]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
