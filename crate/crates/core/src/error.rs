use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("matrix is not Hermitian (max asymmetry {max_asymmetry:e})")]
    NotHermitian { max_asymmetry: f64 },

    #[error("invalid parameters: {0}")]
    InvalidParams(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("product-vector family degenerates (b = {b}, c = {c}); use the search path")]
    DegenerateFamily { b: f64, c: f64 },

    #[error("cannot recover curve parameter: {0}")]
    AmbiguousCurveParameter(String),

    #[error("{0} is outside the positive cone: not a positive map; no witness properties")]
    OutsideCone(String),

    #[error("map not positive: product vector with form value {value:e}")]
    NotPositive { value: f64, xi: Vec<num_complex::Complex64>, eta: Vec<num_complex::Complex64> },

    #[error("invalid density matrix: {0}")]
    InvalidState(String),

    #[error("malformed matrix data: {0}")]
    Format(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
