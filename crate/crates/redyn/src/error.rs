//! Error type shared by all modules.

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or operator dimensions do not match what the operation needs.
    #[error("dimension mismatch in {context}: expected {expected}, got {actual}")]
    Dimension {
        context: &'static str,
        expected: usize,
        actual: usize,
    },

    /// Input was required to be Hermitian but is not, within tolerance.
    #[error("matrix is not Hermitian: max |M - M^dag| = {deviation:.3e} exceeds {tolerance:.3e}")]
    Hermiticity { deviation: f64, tolerance: f64 },

    /// Input was required to be positive semidefinite but has a negative eigenvalue.
    #[error("matrix is not positive semidefinite: min eigenvalue {min_eigenvalue:.3e} is below -{tolerance:.3e}")]
    NotPositive { min_eigenvalue: f64, tolerance: f64 },

    /// Input was required to have unit trace.
    #[error("trace is {trace:?} but must be 1 within {tolerance:.3e}")]
    Trace { trace: (f64, f64), tolerance: f64 },

    /// Input was required to be unitary.
    #[error("matrix is not unitary: max |U^dag U - I| = {deviation:.3e} exceeds {tolerance:.3e}")]
    NotUnitary { deviation: f64, tolerance: f64 },

    /// An operator family does not span the required space.
    #[error("operator family spans {achieved} dimensions but {required} are required")]
    Span { achieved: usize, required: usize },

    /// A linear map that must be inverted is numerically singular.
    #[error("map is numerically singular: smallest singular value {smallest_singular_value:.3e}")]
    SingularMap { smallest_singular_value: f64 },

    /// An operator was required to lie in a spanned subspace but does not.
    #[error("operator lies outside the spanned subspace: residual norm {residual_norm:.3e}")]
    NotInSpan { residual_norm: f64 },

    /// Coefficients that must sum to one do not.
    #[error("coefficients sum to {sum} but must sum to 1 within {tolerance:.3e}")]
    Normalization { sum: f64, tolerance: f64 },

    /// A superoperator or schedule is not a valid master-equation generator.
    #[error("invalid generator: {reason}")]
    GeneratorForm { reason: String },

    /// A time argument falls outside the generator's schedule.
    #[error("time {t} outside the schedule range [{t_min}, {t_max}]")]
    TimeRange { t: f64, t_min: f64, t_max: f64 },

    /// A constructed state is not a valid density matrix.
    #[error("invalid state: {reason}")]
    InvalidState { reason: String },

    /// A scan step failed; carries the offending time pair.
    #[error("scan pair (t1={t1}, t2={t2}) failed: {source}")]
    ScanFailure {
        t1: f64,
        t2: f64,
        #[source]
        source: Box<Error>,
    },

    /// Malformed configuration or scenario input.
    #[error("invalid configuration: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}
