use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("matrix is not positive definite: pivot {pivot:e} at index {index}")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("weight matrix is indefinite along the vector: quadratic form {value:e}")]
    IndefiniteWeight { value: f64 },
    #[error("regularization gamma = {gamma} does not make the objective strongly convex")]
    NonconvexConfiguration { gamma: f64 },
    #[error("argument `{name}` must be nonnegative, got {value}")]
    NegativeArgument { name: &'static str, value: f64 },
    #[error("correction factor must be at least 1, got {value}")]
    InvalidFactor { value: f64 },
    #[error("order G >= A violated: min eigenvalue of G - A is {min_eig:e}")]
    OrderViolated { min_eig: f64 },
    #[error("direction is degenerate: denominator {denominator:e} with nonzero numerator")]
    DegenerateDirection { denominator: f64 },
    #[error("direction must be nonzero")]
    ZeroDirection,
    #[error("missing problem constant `{0}`")]
    MissingConstants(&'static str),
    #[error("line {line_no}: malformed entry: {reason}")]
    MalformedLine { line_no: usize, reason: String },
    #[error("line {line_no}: label `{label}` is not binary")]
    NonBinaryLabel { line_no: usize, label: String },
    #[error("line {line_no}: feature indices are not strictly ascending")]
    NonAscendingIndex { line_no: usize },
    #[error("failed to write output: {0}")]
    SinkFailure(String),
    #[error("envelopes do not share a k-grid")]
    GridMismatch,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::SinkFailure(e.to_string())
    }
}
