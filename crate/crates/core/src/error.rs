use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("non-finite integrand value at node {index} (y = {y})")]
    NonFinite { index: i64, y: f64 },

    #[error("resonant phase: |exp(i*a*zeta) - 1| = {0:e} is below the 1e-8 floor")]
    ResonantPhase(f64),

    #[error("psi evaluated on a branch cut: {0}")]
    OnCut(String),

    #[error("unsupported parameters: {0}")]
    Unsupported(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("contour validation failed: {0}")]
    Deformation(String),

    #[error("singular kernel: target within {0:e} of an integration node")]
    SingularKernel(f64),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error("size guard exceeded: {0}")]
    SizeGuard(String),
}

impl Error {
    /// True for errors caused by bad user input rather than numerical breakdown.
    pub fn is_user_error(&self) -> bool {
        matches!(
            self,
            Error::InvalidParameter(_) | Error::Unsupported(_) | Error::Domain(_) | Error::SizeGuard(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
