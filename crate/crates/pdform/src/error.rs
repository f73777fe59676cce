//! Error type shared across the crate.
//!
//! Variants are grouped by how a caller should react: `Input` problems mean
//! the request itself was malformed, `Computation` problems mean the inputs
//! were well-formed but the math refused (singular matrix, negative form, …),
//! and `Inconclusive` means a verdict-producing routine could not decide at
//! the configured tolerances.

use thiserror::Error;

/// Crate-wide error enum.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands live in different variable counts.
    #[error("dimension mismatch: expected n = {expected}, got n = {got}")]
    DimensionMismatch { expected: usize, got: usize },

    /// Operands have incompatible degrees, or a term's exponents do not sum
    /// to the declared degree.
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),

    /// An operation requiring even degree was handed an odd one.
    #[error("degree must be even and >= 2, got d = {0}")]
    OddDegree(u32),

    /// A matrix that must be symmetric positive definite is not.
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),

    /// Linear solve / inversion failed.
    #[error("singular matrix: {0}")]
    SingularMatrix(String),

    /// A sampled point certified that the form takes negative values, so the
    /// sublevel set has infinite volume and the estimator is meaningless.
    #[error("form takes negative values (g({point:?}) = {value:.6e}); sublevel volume is infinite")]
    NegativeForm { point: Vec<f64>, value: f64 },

    /// A weight form sampled negative where a non-negative weight is required.
    #[error("weight form takes negative values (h({point:?}) = {value:.6e}); use l1_norm, which integrates |h|")]
    NegativeWeight { point: Vec<f64>, value: f64 },

    /// The zero polynomial was passed where a nonzero one is required.
    #[error("the zero polynomial has no classification")]
    ZeroPolynomial,

    /// A volume integral was requested for a form whose sublevel set is
    /// certified to have infinite volume.
    #[error("volume integral diverges: {0}")]
    InfiniteVolume(String),

    /// A pseudo-moment functional is missing a required moment.
    #[error("pseudo-moment functional incomplete: missing moment for {0:?}")]
    MissingMoment(Vec<u32>),

    /// The functional's moment matrix is singular, so no Gram matrix exists
    /// on this route (the functional does not lie in the interior).
    #[error("moment matrix is singular (min eigenvalue {min_eig:.3e}); functional is not in the interior")]
    NotInInterior { min_eig: f64 },

    /// Input deserialization failed.
    #[error("invalid input: {0}")]
    Input(String),

    /// A verdict-producing check could not decide at the given tolerances.
    #[error("inconclusive: {0}")]
    Inconclusive(String),
}

/// Crate-wide result alias.
pub type Result<T> = std::result::Result<T, Error>;

impl From<serde_json::Error> for Error {
    fn from(e: serde_json::Error) -> Self {
        Error::Input(e.to_string())
    }
}
