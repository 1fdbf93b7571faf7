//! Dense complex linear algebra on tensor-product spaces.
//!
//! Everything downstream (channels, assignment maps, generators) is built on
//! the helpers here: Kronecker products with system-first factor ordering,
//! partial traces, column-stacking vectorization, sorted Hermitian
//! eigendecomposition, pseudoinverses with a relative rank cutoff, seeded
//! Haar-unitary and random-density sampling, and validated `DensityMatrix` /
//! `UnitaryMatrix` newtypes with a JSON wire format.

mod eig;
mod io;
mod matrix;
mod random;
mod types;

pub use eig::{eig_hermitian, min_eigenvalue, numeric_rank, pseudoinverse};
pub use io::MatrixJson;
pub use matrix::{
    fro_diff, hermitian_part, hs_inner, is_hermitian, matrix_unit, max_abs, max_abs_diff,
    partial_trace_env, partial_trace_sys, standard_density_basis, swap_gate, tensor, unvec_col,
    vec_col,
};
pub use random::{ginibre, random_density, random_hermitian, random_pure_state, random_unitary};
pub use types::{DensityMatrix, UnitaryMatrix};
