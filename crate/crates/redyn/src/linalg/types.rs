//! Validated state and unitary newtypes.

use crate::error::{Error, Result};
use crate::linalg::eig::min_eigenvalue;
use crate::linalg::matrix::max_abs;
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat, CVec};

/// A density matrix: Hermitian, positive semidefinite, unit trace.
/// Construction validates all three against the tolerance policy.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    mat: CMat,
    dims: Option<(usize, usize)>,
}

impl DensityMatrix {
    /// Validate and wrap a matrix as a density operator.
    pub fn new(mat: CMat, tol: &TolerancePolicy) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension {
                context: "DensityMatrix::new",
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        let herm_dev = max_abs(&(&mat - mat.adjoint()));
        let herm_tol = tol.herm_for(&mat);
        if herm_dev > herm_tol {
            return Err(Error::Hermiticity {
                deviation: herm_dev,
                tolerance: herm_tol,
            });
        }
        let tr = mat.trace();
        let tr_tol = tol.trace_for(&mat);
        if (tr - C64::new(1.0, 0.0)).norm() > tr_tol {
            return Err(Error::Trace {
                trace: (tr.re, tr.im),
                tolerance: tr_tol,
            });
        }
        let min_eig = min_eigenvalue(&mat, tol)?;
        let psd_tol = tol.psd_for(mat.nrows());
        if min_eig < -psd_tol {
            return Err(Error::NotPositive {
                min_eigenvalue: min_eig,
                tolerance: psd_tol,
            });
        }
        Ok(Self { mat, dims: None })
    }

    /// Validate a density operator living on a tensor-product space and
    /// record the factorization `(d_sys, d_env)`.
    pub fn new_joint(mat: CMat, d_sys: usize, d_env: usize, tol: &TolerancePolicy) -> Result<Self> {
        if mat.nrows() != d_sys * d_env {
            return Err(Error::Dimension {
                context: "DensityMatrix::new_joint",
                expected: d_sys * d_env,
                actual: mat.nrows(),
            });
        }
        let mut dm = Self::new(mat, tol)?;
        dm.dims = Some((d_sys, d_env));
        Ok(dm)
    }

    /// Rank-one density from a state vector (normalizes the vector first).
    pub fn from_pure(v: &CVec) -> Self {
        let n = v.norm();
        assert!(n > 0.0, "from_pure: zero vector");
        let w = v.unscale(n);
        Self {
            mat: &w * w.adjoint(),
            dims: None,
        }
    }

    /// The maximally mixed state `I/d`.
    pub fn maximally_mixed(d: usize) -> Self {
        Self {
            mat: CMat::identity(d, d).unscale(d as f64),
            dims: None,
        }
    }

    /// Attach a tensor-product factorization after the fact.
    pub fn with_dims(mut self, d_sys: usize, d_env: usize) -> Result<Self> {
        if self.mat.nrows() != d_sys * d_env {
            return Err(Error::Dimension {
                context: "DensityMatrix::with_dims",
                expected: d_sys * d_env,
                actual: self.mat.nrows(),
            });
        }
        self.dims = Some((d_sys, d_env));
        Ok(self)
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Tensor factorization `(d_sys, d_env)`, when one was recorded.
    pub fn dims(&self) -> Option<(usize, usize)> {
        self.dims
    }

    pub fn into_matrix(self) -> CMat {
        self.mat
    }
}

/// A unitary matrix, validated as `‖U†U − I‖_max ≤ tol` on construction.
#[derive(Debug, Clone, PartialEq)]
pub struct UnitaryMatrix {
    mat: CMat,
}

impl UnitaryMatrix {
    pub fn new(mat: CMat, tol: &TolerancePolicy) -> Result<Self> {
        if !mat.is_square() {
            return Err(Error::Dimension {
                context: "UnitaryMatrix::new",
                expected: mat.nrows(),
                actual: mat.ncols(),
            });
        }
        let d = mat.nrows();
        let dev = max_abs(&(mat.adjoint() * &mat - CMat::identity(d, d)));
        let allowed = tol.unitary_for(&mat);
        if dev > allowed {
            return Err(Error::NotUnitary {
                deviation: dev,
                tolerance: allowed,
            });
        }
        Ok(Self { mat })
    }

    /// Wrap a matrix known to be unitary by construction (e.g. a QR factor).
    pub(crate) fn new_unchecked(mat: CMat) -> Self {
        Self { mat }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            mat: CMat::identity(d, d),
        }
    }

    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn dim(&self) -> usize {
        self.mat.nrows()
    }

    /// Conjugate a matrix: `U X U†`.
    pub fn conjugate(&self, x: &CMat) -> CMat {
        &self.mat * x * self.mat.adjoint()
    }
}
