use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum LabError {
    #[error("singular metric: {0}")]
    SingularMetric(String),
    #[error("index error: {0}")]
    Index(String),
    #[error("outside chart domain: {0}")]
    Domain(String),
    #[error("resolution error: {0}")]
    Resolution(String),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("zero vector")]
    ZeroVector,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("unknown geometry: {0}")]
    UnknownGeometry(String),
    #[error("bidegree error: {0}")]
    Bidegree(String),
    #[error("metric file: {0}")]
    MetricFile(String),
}

pub type Result<T> = std::result::Result<T, LabError>;
