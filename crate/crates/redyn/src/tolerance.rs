//! Numerical tolerance policy shared by every module.
//!
//! All comparisons in the crate go through one policy so that a single knob
//! (the CLI's `--tol`) scales them uniformly. Base values are absolute; the
//! `*_for` helpers scale them by the magnitude of the data or the dimension
//! of the space, which keeps checks meaningful for badly scaled inputs.

use serde::{Deserialize, Serialize};

use crate::linalg::max_abs;
use crate::CMat;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TolerancePolicy {
    /// Hermiticity deviation, max |M - M^dag| entrywise.
    pub herm: f64,
    /// Allowed negativity of eigenvalues in positive-semidefinite checks.
    pub psd: f64,
    /// Trace deviation for unit-trace checks.
    pub trace: f64,
    /// Deviation of U^dag U from the identity.
    pub unitary: f64,
    /// Relative singular-value cutoff for rank decisions and pseudoinverses.
    pub rank: f64,
    /// Entrywise equality of matrices and scalars.
    pub equality: f64,
}

impl Default for TolerancePolicy {
    fn default() -> Self {
        Self {
            herm: 1e-9,
            psd: 1e-9,
            trace: 1e-9,
            unitary: 1e-9,
            rank: 1e-9,
            equality: 1e-9,
        }
    }
}

impl TolerancePolicy {
    /// Default policy with every base value multiplied by `factor`.
    pub fn scaled(factor: f64) -> Self {
        Self::default().scale(factor)
    }

    /// Multiply every base value by `factor`.
    pub fn scale(mut self, factor: f64) -> Self {
        self.herm *= factor;
        self.psd *= factor;
        self.trace *= factor;
        self.unitary *= factor;
        self.rank *= factor;
        self.equality *= factor;
        self
    }

    fn magnitude(m: &CMat) -> f64 {
        max_abs(m).max(1.0)
    }

    /// Hermiticity tolerance scaled by the matrix magnitude.
    pub fn herm_for(&self, m: &CMat) -> f64 {
        self.herm * Self::magnitude(m)
    }

    /// PSD tolerance scaled by the dimension of the space.
    pub fn psd_for(&self, dim: usize) -> f64 {
        self.psd * dim as f64
    }

    /// Trace tolerance scaled by the matrix magnitude.
    pub fn trace_for(&self, m: &CMat) -> f64 {
        self.trace * Self::magnitude(m)
    }

    /// Unitarity tolerance scaled by the matrix magnitude.
    pub fn unitary_for(&self, m: &CMat) -> f64 {
        self.unitary * Self::magnitude(m)
    }

    /// Equality tolerance scaled by the larger of the two operands.
    pub fn equality_for(&self, a: &CMat, b: &CMat) -> f64 {
        self.equality * Self::magnitude(a).max(Self::magnitude(b))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::C64;

    #[test]
    fn defaults_are_uniform() {
        let tol = TolerancePolicy::default();
        assert_eq!(tol.herm, 1e-9);
        assert_eq!(tol.psd, 1e-9);
        assert_eq!(tol.rank, 1e-9);
    }

    #[test]
    fn scaling_is_uniform() {
        let tol = TolerancePolicy::scaled(100.0);
        assert!((tol.herm - 1e-7).abs() < 1e-20);
        assert!((tol.equality - 1e-7).abs() < 1e-20);
    }

    #[test]
    fn magnitude_scaling_kicks_in_above_unit_norm() {
        let tol = TolerancePolicy::default();
        let small = CMat::from_element(2, 2, C64::new(0.1, 0.0));
        let large = CMat::from_element(2, 2, C64::new(50.0, 0.0));
        assert_eq!(tol.herm_for(&small), 1e-9);
        assert_eq!(tol.herm_for(&large), 50.0 * 1e-9);
    }

    #[test]
    fn psd_tolerance_scales_with_dimension() {
        let tol = TolerancePolicy::default();
        assert_eq!(tol.psd_for(4), 4e-9);
    }
}
