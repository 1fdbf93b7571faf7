//! Numerical toolkit for the reduced dynamics of open quantum systems.
//!
//! Starting from an explicit system–environment model (a set of admissible
//! joint initial states and a joint unitary), the crate constructs the
//! assignment map that lifts reduced states back to joint states, derives the
//! induced reduced dynamics, and classifies the result: Hermiticity
//! preservation, trace preservation, positivity on sampled states, and
//! complete positivity via the Choi spectrum. A companion module handles
//! master-equation generators with piecewise-constant schedules, their
//! canonical (diagonal) form, and CP-divisibility scans of the intermediate
//! maps.
//!
//! Conventions used throughout:
//!
//! * tensor factors are ordered system-first, so the system index varies
//!   slowest and a joint matrix acts on indices `s * d_E + e`;
//! * operators are vectorized by column stacking, so `X -> A X B` has
//!   transfer matrix `Bᵀ ⊗ A`;
//! * Choi matrices are input-first: `C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.

pub mod assignment;
pub mod channels;
pub mod dynamics;
pub mod error;
pub mod lindblad;
pub mod linalg;
pub mod scenario;
pub mod tolerance;

pub use error::{Error, Result};
pub use tolerance::TolerancePolicy;

/// Complex scalar used everywhere in the crate.
pub type C64 = num_complex::Complex<f64>;
/// Dense complex matrix (dynamically sized).
pub type CMat = nalgebra::DMatrix<C64>;
/// Dense complex column vector.
pub type CVec = nalgebra::DVector<C64>;
