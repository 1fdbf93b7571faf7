//! Elementwise helpers, tensor products, partial traces and vectorization.

use crate::error::{Error, Result};
use crate::{C64, CMat, CVec};

/// Largest entry modulus, `max_ij |m_ij|`.
pub fn max_abs(m: &CMat) -> f64 {
    m.iter().map(|c| c.norm()).fold(0.0, f64::max)
}

/// Largest entrywise difference `max_ij |a_ij - b_ij|`. Panics on shape mismatch.
pub fn max_abs_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "max_abs_diff: shape mismatch");
    max_abs(&(a - b))
}

/// Frobenius norm of the difference `‖a - b‖_F`. Panics on shape mismatch.
pub fn fro_diff(a: &CMat, b: &CMat) -> f64 {
    assert_eq!(a.shape(), b.shape(), "fro_diff: shape mismatch");
    (a - b).norm()
}

/// Hilbert–Schmidt inner product `Tr(a† b)`.
pub fn hs_inner(a: &CMat, b: &CMat) -> C64 {
    a.dotc(b)
}

/// Hermitian part `(m + m†)/2`.
pub fn hermitian_part(m: &CMat) -> CMat {
    (m + m.adjoint()).scale(0.5)
}

/// Whether `max |M - M†| <= tol`.
pub fn is_hermitian(m: &CMat, tol: f64) -> bool {
    m.is_square() && max_abs(&(m - m.adjoint())) <= tol
}

/// Kronecker product with the system factor first: the row index of the
/// result is `i_a * rows(b) + i_b`, so `a` indexes the slow (system) factor.
pub fn tensor(a: &CMat, b: &CMat) -> CMat {
    a.kronecker(b)
}

/// Square matrix unit `E_ij = |i⟩⟨j|` of dimension `d`.
pub fn matrix_unit(d: usize, i: usize, j: usize) -> CMat {
    let mut m = CMat::zeros(d, d);
    m[(i, j)] = C64::new(1.0, 0.0);
    m
}

fn check_joint(m: &CMat, d_sys: usize, d_env: usize, context: &'static str) -> Result<()> {
    let d = d_sys * d_env;
    if m.nrows() != d || m.ncols() != d {
        return Err(Error::Dimension {
            context,
            expected: d,
            actual: m.nrows().max(m.ncols()),
        });
    }
    Ok(())
}

/// Partial trace over the environment (second, fast-varying) factor:
/// `out[i, j] = Σ_k m[i*d_env + k, j*d_env + k]`.
pub fn partial_trace_env(m: &CMat, d_sys: usize, d_env: usize) -> Result<CMat> {
    check_joint(m, d_sys, d_env, "partial_trace_env")?;
    let mut out = CMat::zeros(d_sys, d_sys);
    for i in 0..d_sys {
        for j in 0..d_sys {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d_env {
                acc += m[(i * d_env + k, j * d_env + k)];
            }
            out[(i, j)] = acc;
        }
    }
    Ok(out)
}

/// Partial trace over the system (first, slow-varying) factor:
/// `out[a, b] = Σ_k m[k*d_env + a, k*d_env + b]`.
pub fn partial_trace_sys(m: &CMat, d_sys: usize, d_env: usize) -> Result<CMat> {
    check_joint(m, d_sys, d_env, "partial_trace_sys")?;
    let mut out = CMat::zeros(d_env, d_env);
    for a in 0..d_env {
        for b in 0..d_env {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..d_sys {
                acc += m[(k * d_env + a, k * d_env + b)];
            }
            out[(a, b)] = acc;
        }
    }
    Ok(out)
}

/// Column-stacking vectorization: `vec(X)[j*rows + i] = X[i, j]`.
pub fn vec_col(m: &CMat) -> CVec {
    CVec::from_column_slice(m.as_slice())
}

/// Inverse of [`vec_col`]: reshape a length `rows*cols` vector back into a matrix.
pub fn unvec_col(v: &CVec, rows: usize, cols: usize) -> CMat {
    assert_eq!(v.len(), rows * cols, "unvec_col: length mismatch");
    CMat::from_column_slice(rows, cols, v.as_slice())
}

/// The SWAP gate on two factors of dimension `d`: `|i⟩|j⟩ -> |j⟩|i⟩`.
pub fn swap_gate(d: usize) -> CMat {
    let mut m = CMat::zeros(d * d, d * d);
    for i in 0..d {
        for j in 0..d {
            m[(j * d + i, i * d + j)] = C64::new(1.0, 0.0);
        }
    }
    m
}

/// A spanning family of `d²` pure-state density matrices: the computational
/// projectors `|i⟩⟨i|`, plus `|+_ij⟩⟨+_ij|` and `|y_ij⟩⟨y_ij|` for each pair
/// `i < j` with `|+_ij⟩ = (|i⟩+|j⟩)/√2` and `|y_ij⟩ = (|i⟩+i|j⟩)/√2`.
/// Linearly independent, so any operator expands over them.
pub fn standard_density_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d);
    for i in 0..d {
        basis.push(matrix_unit(d, i, i));
    }
    let half = C64::new(0.5, 0.0);
    for i in 0..d {
        for j in (i + 1)..d {
            // |+⟩⟨+| = (E_ii + E_jj + E_ij + E_ji)/2
            let plus = (matrix_unit(d, i, i)
                + matrix_unit(d, j, j)
                + matrix_unit(d, i, j)
                + matrix_unit(d, j, i))
                * half;
            basis.push(plus);
            // |y⟩⟨y| = (E_ii + E_jj - i E_ij + i E_ji)/2
            let im = C64::new(0.0, 1.0);
            let y = (matrix_unit(d, i, i) + matrix_unit(d, j, j)
                - matrix_unit(d, i, j) * im
                + matrix_unit(d, j, i) * im)
                * half;
            basis.push(y);
        }
    }
    basis
}
