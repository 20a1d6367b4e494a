use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("space mismatch: expected {expected}, found {found}")]
    SpaceMismatch { expected: String, found: String },
    #[error("invalid point: {0}")]
    InvalidPoint(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("degenerate grid: {0}")]
    DegenerateGrid(String),
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("degenerate frame: upper frame bound is {0}")]
    DegenerateFrame(f64),
    #[error("ill-conditioned frame operator: lower bound {lower:e}, upper bound {upper:e}, ratio below {threshold:e}")]
    IllConditioned { lower: f64, upper: f64, threshold: f64 },
    #[error("degree cap {cap} too small: realization error {error:e} exceeds {tolerance:e}")]
    DegreeCapTooSmall { cap: usize, error: f64, tolerance: f64 },
    #[error("operator is not verified weakly localized: {}", .0.join("; "))]
    NotLocalized(Vec<String>),
    #[error("operators live on different frame contexts")]
    ContextMismatch,
    #[error("empty boundary band: {0}")]
    EmptyBand(String),
    #[error("index {index} out of range (len {len})")]
    IndexOutOfRange { index: usize, len: usize },
    #[error("linear algebra failure: {0}")]
    Linalg(String),
    #[error("format error: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl From<ndarray_linalg::error::LinalgError> for Error {
    fn from(e: ndarray_linalg::error::LinalgError) -> Self {
        Error::Linalg(e.to_string())
    }
}

impl From<lax::error::Error> for Error {
    fn from(e: lax::error::Error) -> Self {
        Error::Linalg(e.to_string())
    }
}
