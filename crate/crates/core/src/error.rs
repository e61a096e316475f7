use thiserror::Error;

use crate::standard::StandardnessCertificate;

#[derive(Debug, Error)]
pub enum Error {
    #[error("usage error: {0}")]
    Usage(String),

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("subspace is not standard: dim(K∩iK) = {}, dim(K+iK) = {} of {}", .0.dim_k_cap_ik, .0.dim_k_plus_ik, .0.ambient_real_dim)]
    NotStandard(StandardnessCertificate),

    #[error("numeric error: {0}")]
    Numeric(String),

    #[error("truncation error: level {level} exceeds cutoff {cutoff}")]
    Truncation { level: usize, cutoff: usize },

    #[error("boundary leakage {leaked:.3e} exceeds budget {budget:.3e}")]
    BoundaryLeakage { leaked: f64, budget: f64 },

    #[error("domain violation: amplified tail mass 10^{tail_log10:.2} exceeds 10^{threshold_log10:.2}")]
    DomainViolation { tail_log10: f64, threshold_log10: f64 },

    #[error("empty model: {0}")]
    EmptyModel(String),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn check_dim(expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { expected, found });
    }
    Ok(())
}
