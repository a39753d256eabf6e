use thiserror::Error;

/// Errors raised by model construction, the factorization engine and the certificate layer.
#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum Error {
    #[error("instance error: {0}")]
    Instance(String),
    #[error("not contractible: {0}")]
    NonContractible(String),
    #[error("relative Picard number mismatch: {0}")]
    RhoMismatch(String),
    #[error("not relatively ample: {0}")]
    NotRelativelyAmple(String),
    #[error("singularity class violation: {0}")]
    SingularityClass(String),
    #[error("second extremal ray missing: {0}")]
    MissingRay(String),
    #[error("classes not proportional: {0}")]
    NotProportional(String),
    #[error("nonpositive denominator: {0}")]
    NonpositiveDenominator(String),
    #[error("nonpositive log discrepancy against a positive multiplicity: {0}")]
    NonpositiveDiscrepancyDenominator(String),
    #[error("no admissible crepant divisor to extract: {0}")]
    NoCrepantAtDepthZero(String),
    #[error("extremal ray not found: {0}")]
    RayNotFound(String),
    #[error("iteration cap of {0} links exceeded")]
    IterationCapExceeded(usize),
    #[error("internal invariant violated: {0}")]
    InternalInvariant(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error("schema error: {0}")]
    Schema(String),
}

/// Coarse grouping used for process exit codes.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorFamily {
    Instance,
    RayNotFound,
    IterationCap,
    Internal,
    Schema,
}

impl Error {
    pub fn family(&self) -> ErrorFamily {
        match self {
            Error::Instance(_)
            | Error::NonContractible(_)
            | Error::RhoMismatch(_)
            | Error::NotRelativelyAmple(_)
            | Error::SingularityClass(_)
            | Error::MissingRay(_)
            | Error::NotProportional(_)
            | Error::NonpositiveDenominator(_)
            | Error::NonpositiveDiscrepancyDenominator(_)
            | Error::NoCrepantAtDepthZero(_)
            | Error::Precondition(_) => ErrorFamily::Instance,
            Error::RayNotFound(_) => ErrorFamily::RayNotFound,
            Error::IterationCapExceeded(_) => ErrorFamily::IterationCap,
            Error::InternalInvariant(_) => ErrorFamily::Internal,
            Error::Schema(_) => ErrorFamily::Schema,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
