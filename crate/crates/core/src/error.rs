use thiserror::Error;

/// Errors produced by the library.
#[derive(Debug, Error)]
pub enum Error {
    /// A multi-index component or linear index is outside the interior lattice.
    #[error("invalid index: {0}")]
    InvalidIndex(String),

    /// A point is outside the unit cube `[0,1]^d`.
    #[error("point outside the domain: {0}")]
    Domain(String),

    /// A scalar parameter is outside its documented range.
    #[error("invalid parameter: {0}")]
    Parameter(String),

    /// Two objects built for different grids (or of mismatched length) were combined.
    #[error("shape mismatch: {0}")]
    Shape(String),

    /// A requested allocation exceeds the desk-scale memory budget.
    #[error("capacity exceeded: {0}")]
    Capacity(String),

    /// The correlation kernel failed a structural check (symmetry, bound).
    #[error("correlation kernel rejected: {0}")]
    Kernel(String),

    /// The cell covariance could not be factorized even at the largest jitter.
    #[error("covariance not positive semidefinite: {0}")]
    NotPositiveSemidefinite(String),

    /// A non-finite value appeared while time stepping; dt is likely too large.
    #[error("numerical blow-up at step {step} (t = {time:.6e}): {detail}; reduce dt")]
    BlowUp {
        step: u64,
        time: f64,
        detail: String,
    },

    /// A numerical routine lost more accuracy than its contract allows.
    #[error("numerical routine failed: {0}")]
    Numeric(String),

    /// Trajectory snapshots are too sparse for the requested statistic.
    #[error("snapshot resolution too coarse: {0}")]
    Resolution(String),

    /// An ensemble statistic was requested with too few replicas.
    #[error("not enough replicas: {0}")]
    StatisticalPower(String),

    /// A two-sample statistic was requested with too few samples.
    #[error("not enough samples: {0}")]
    SampleSize(String),
}

impl Error {
    /// Whether this error reflects invalid input rather than a numerical failure.
    ///
    /// Callers that map errors to process exit codes treat validation errors
    /// and numerical errors differently.
    pub fn is_validation(&self) -> bool {
        !matches!(
            self,
            Error::BlowUp { .. } | Error::NotPositiveSemidefinite(_) | Error::Numeric(_)
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;
