use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

/// Failure modes of the reduction pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("sE - A is singular or ill-conditioned at the evaluation point")]
    SingularAtPoint,
    #[error("iteration did not converge: {0}")]
    NoConvergence(String),
    #[error("an eigenvalue lies on or too close to the region boundary")]
    RegionBoundaryEigenvalue,
    #[error("linear system is singular: {0}")]
    SingularSystem(String),
    #[error("transformation is too ill-conditioned (condition estimate {0:.3e})")]
    IllConditionedTransform(f64),
    #[error("pencil is not c-stable")]
    NotStable,
    #[error("Smith iteration does not converge (spectral radius >= 1)")]
    NotConvergent,
    #[error("matrix A is singular")]
    SingularA,
    #[error("no nilpotency detected within {0} powers")]
    IndexExceeded(usize),
    #[error("truncation policy removes every state")]
    EmptyModel,
    #[error("requested order splits a multiple Hankel singular value")]
    AmbiguousOrder,
    #[error("system must have as many inputs as outputs")]
    NotSquare,
    #[error("constraint block is rank deficient")]
    RankDeficientConstraint,
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable identifier of the variant, used in CLI diagnostics.
    pub fn name(&self) -> &'static str {
        match self {
            Error::DimensionMismatch(_) => "DimensionMismatch",
            Error::SingularAtPoint => "SingularAtPoint",
            Error::NoConvergence(_) => "NoConvergence",
            Error::RegionBoundaryEigenvalue => "RegionBoundaryEigenvalue",
            Error::SingularSystem(_) => "SingularSystem",
            Error::IllConditionedTransform(_) => "IllConditionedTransform",
            Error::NotStable => "NotStable",
            Error::NotConvergent => "NotConvergent",
            Error::SingularA => "SingularA",
            Error::IndexExceeded(_) => "IndexExceeded",
            Error::EmptyModel => "EmptyModel",
            Error::AmbiguousOrder => "AmbiguousOrder",
            Error::NotSquare => "NotSquare",
            Error::RankDeficientConstraint => "RankDeficientConstraint",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}
