//! Hermitian eigendecomposition and SVD-based rank tools.

use nalgebra::SymmetricEigen;

use crate::error::{Error, Result};
use crate::linalg::matrix::{hermitian_part, max_abs};
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat};

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted
/// ascending. Returns `(eigenvalues, eigenvectors)` with orthonormal
/// eigenvectors as columns, so `M = V diag(λ) V†`.
///
/// The input is checked against `tol.herm_for` and the decomposition runs on
/// the Hermitian part, which keeps the result well defined under roundoff.
pub fn eig_hermitian(m: &CMat, tol: &TolerancePolicy) -> Result<(Vec<f64>, CMat)> {
    if !m.is_square() {
        return Err(Error::Dimension {
            context: "eig_hermitian",
            expected: m.nrows(),
            actual: m.ncols(),
        });
    }
    let dev = max_abs(&(m - m.adjoint()));
    let allowed = tol.herm_for(m);
    if dev > allowed {
        return Err(Error::Hermiticity {
            deviation: dev,
            tolerance: allowed,
        });
    }
    let se = SymmetricEigen::new(hermitian_part(m));
    let n = se.eigenvalues.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| se.eigenvalues[a].total_cmp(&se.eigenvalues[b]));
    let values: Vec<f64> = order.iter().map(|&k| se.eigenvalues[k]).collect();
    let mut vectors = CMat::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &se.eigenvectors.column(src));
    }
    Ok((values, vectors))
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &CMat, tol: &TolerancePolicy) -> Result<f64> {
    let (values, _) = eig_hermitian(m, tol)?;
    Ok(values[0])
}

/// Moore–Penrose pseudoinverse with a relative singular-value cutoff:
/// singular values below `rank_tol * σ_max` are treated as zero.
pub fn pseudoinverse(m: &CMat, rank_tol: f64) -> CMat {
    let svd = m.clone().svd(true, true);
    let u = svd.u.as_ref().expect("svd computed with u");
    let v_t = svd.v_t.as_ref().expect("svd computed with v_t");
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    let cutoff = rank_tol * s_max;
    let inv_s: Vec<C64> = svd
        .singular_values
        .iter()
        .map(|&s| {
            if s > cutoff && s > 0.0 {
                C64::new(1.0 / s, 0.0)
            } else {
                C64::new(0.0, 0.0)
            }
        })
        .collect();
    // pinv = V Σ⁺ U†
    let k = inv_s.len();
    let mut scaled_ut = u.adjoint();
    for (row, w) in inv_s.iter().enumerate().take(k) {
        let mut r = scaled_ut.row_mut(row);
        r *= *w;
    }
    v_t.adjoint() * scaled_ut
}

/// Numerical rank: number of singular values above `rank_tol * σ_max`.
pub fn numeric_rank(m: &CMat, rank_tol: f64) -> usize {
    let svd = m.clone().svd(false, false);
    let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
    if s_max == 0.0 {
        return 0;
    }
    let cutoff = rank_tol * s_max;
    svd.singular_values.iter().filter(|&&s| s > cutoff).count()
}
