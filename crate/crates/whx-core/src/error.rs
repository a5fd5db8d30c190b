//! Error types shared across the toolkit.

use num_complex::Complex64;
use thiserror::Error;

/// Result alias used throughout the crate.
pub type WhResult<T> = Result<T, WhError>;

/// Failure modes of the factorization and solve routines.
#[derive(Debug, Clone, Error)]
pub enum WhError {
    /// Malformed or inconsistent input data.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// A kernel value came too close to zero on the contour.
    #[error("kernel singular on the contour: min |f| = {min_abs:.3e} < {tol:.3e}")]
    ContourSingularity { min_abs: f64, tol: f64 },

    /// The grid cap was reached before the quantity of interest resolved.
    #[error("resolution failure: {0}")]
    Resolution(String),

    /// A negative-index problem whose solvability moments do not vanish.
    #[error("no solution: {} solvability moment(s) violated", moments.len())]
    NoSolution { moments: Vec<Complex64> },

    /// A routine restricted to zero-index kernels received a nonzero index.
    #[error("kernel index {index} is nonzero; use the general scalar solver")]
    NotCanonical { index: i64 },

    /// The supplied point is not a determinant root.
    #[error("not a determinant root: |det| = {det_abs:.3e} at the supplied point")]
    InvalidRoot { det_abs: f64 },

    /// Determinant root with a nullspace richer than a single direction.
    #[error("unsupported root multiplicity at {root}: nullity {nullity}")]
    UnsupportedMultiplicity { root: Complex64, nullity: usize },

    /// A linear system required by the solver is numerically unreliable.
    #[error("ill-conditioned linear system: estimated condition {cond:.3e}")]
    IllConditioned { cond: f64 },

    /// An iteration produced growing corrections.
    #[error("iteration diverged after {steps} step(s)")]
    Divergence { steps: usize, history: Vec<f64> },

    /// A multivalued quantity could not be continued single-valuedly.
    #[error("branch ambiguity: {0}")]
    BranchAmbiguity(String),

    /// The input does not belong to the class a method requires.
    #[error("not in class: {0}")]
    NotInClass(String),

    /// A truncated system was singular; retry with a larger truncation.
    #[error("singular truncation at size {n}")]
    SingularTruncation { n: usize },
}

impl WhError {
    /// Exit-code bucket used by the command-line front end:
    /// 2 invalid input, 3 numerical failure, 4 not-in-class.
    pub fn exit_code(&self) -> i32 {
        match self {
            WhError::InvalidInput(_) => 2,
            WhError::ContourSingularity { .. }
            | WhError::Resolution(_)
            | WhError::NoSolution { .. }
            | WhError::NotCanonical { .. }
            | WhError::InvalidRoot { .. }
            | WhError::IllConditioned { .. }
            | WhError::Divergence { .. }
            | WhError::SingularTruncation { .. } => 3,
            WhError::UnsupportedMultiplicity { .. }
            | WhError::BranchAmbiguity(_)
            | WhError::NotInClass(_) => 4,
        }
    }

    /// Stable machine-readable tag for the error kind.
    pub fn kind(&self) -> &'static str {
        match self {
            WhError::InvalidInput(_) => "invalid-input",
            WhError::ContourSingularity { .. } => "contour-singularity",
            WhError::Resolution(_) => "resolution",
            WhError::NoSolution { .. } => "no-solution",
            WhError::NotCanonical { .. } => "not-canonical",
            WhError::InvalidRoot { .. } => "invalid-root",
            WhError::UnsupportedMultiplicity { .. } => "unsupported-multiplicity",
            WhError::IllConditioned { .. } => "ill-conditioned",
            WhError::Divergence { .. } => "divergence",
            WhError::BranchAmbiguity(_) => "branch-ambiguity",
            WhError::NotInClass(_) => "not-in-class",
            WhError::SingularTruncation { .. } => "singular-truncation",
        }
    }
}
