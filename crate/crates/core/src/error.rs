use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("syntax error at byte {offset}: expected one of {}", expected.join(", "))]
    Syntax { offset: usize, expected: Vec<String> },

    #[error("unknown identifier `{name}` at byte {offset}")]
    UnknownIdentifier { name: String, offset: usize },

    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },

    #[error("dimension {0} exceeds the supported maximum of {max}", max = crate::expr::MAX_DIM)]
    DimensionTooLarge(usize),

    #[error("metric is not positive definite at {point:?}")]
    SingularMetric { point: Vec<f64> },

    #[error("point {point:?} is outside the chart domain")]
    OutsideDomain { point: Vec<f64> },

    #[error("geodesic left the chart domain at r = {r}")]
    LeftDomain { r: f64 },

    #[error("energy drift {drift:e} exceeds tolerance; reduce the step")]
    StepTooLarge { drift: f64 },

    #[error("instance is not a Schouten soliton: rho = {rho}, expected {expected}")]
    NotSchouten { rho: f64, expected: f64 },

    #[error("test function is (weighted) constant on the grid")]
    DegenerateTestFunction,

    #[error("eigensolver did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("factorization failed: {0}")]
    Factorization(String),

    #[error("invalid input: {0}")]
    Invalid(String),

    #[error("unknown catalog entry `{0}`")]
    UnknownCatalogEntry(String),

    #[error("config error at {path}: {message}")]
    Config { path: String, message: String },

    #[error("io error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
