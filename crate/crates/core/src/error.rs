use thiserror::Error;

/// Errors raised while evaluating kernels, solving, or checking estimates.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("points belong to different geometries: {0}")]
    DomainMismatch(String),

    #[error("series truncation budget exceeded: {0}")]
    Truncation(String),

    #[error("radius {radius} exceeds the chart domain r <= {limit}")]
    ChartTruncation { radius: f64, limit: f64 },

    #[error("not applicable: {0}")]
    NotApplicable(String),

    #[error("curvature violation: {0}")]
    CurvatureViolation(String),

    #[error("hypothesis violated: {0}")]
    Hypothesis(String),

    #[error("precondition failed: {0}")]
    Precondition(String),

    #[error("data integrity: {0}")]
    DataIntegrity(String),

    #[error("degenerate warp: f({r}) = {value} at a non-pole node")]
    DegenerateWarp { r: f64, value: f64 },

    #[error("singular tridiagonal system at row {row}")]
    SingularSystem { row: usize },

    #[error("parse error: {0}")]
    Parse(String),

    #[error("unknown estimate id `{0}`")]
    UnknownEstimate(String),
}

pub type Result<T> = std::result::Result<T, Error>;
