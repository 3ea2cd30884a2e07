use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SimError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("matrix is not symplectic (max deviation {0:.3e})")]
    NotSymplectic(f64),
    #[error("covariance is not positive definite ({0})")]
    NotPositiveDefinite(String),
    #[error("measured covariance block is singular (pivot {0:.3e})")]
    SingularMeasurement(f64),
    #[error("postselected outcome has zero probability")]
    ZeroProbability,
    #[error("truncation error: {0}")]
    Truncation(String),
    #[error("outcome grid does not cover the density support: {0}")]
    Coverage(String),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, SimError>;
