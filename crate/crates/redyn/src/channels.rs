//! Superoperators on finite-dimensional operator spaces: transfer-matrix
//! representation, Choi matrices, spectral (operator-sum) decomposition and
//! classification.
//!
//! A map `Φ: L(C^{d_in}) -> L(C^{d_out})` is stored as its transfer matrix
//! acting on column-stacked operators, `vec(Φ(X)) = T vec(X)`, so that
//! `X -> A X B` has `T = Bᵀ ⊗ A`. The Choi matrix is input-first,
//! `C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`; complete positivity is `C ⪰ 0` up to the
//! PSD tolerance, and the raw (trace `d_in` for trace-preserving maps) Choi
//! spectrum is what this module reports.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hermitian_part, max_abs, numeric_rank, partial_trace_env,
    pseudoinverse, random_pure_state, unvec_col, vec_col, MatrixJson,
};
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat};

/// A linear map between operator spaces, held as its transfer matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct SuperOp {
    d_in: usize,
    d_out: usize,
    transfer: CMat,
}

/// JSON form of a superoperator: `{"d_in", "d_out", "transfer"}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuperOpJson {
    pub d_in: usize,
    pub d_out: usize,
    pub transfer: MatrixJson,
}

impl SuperOp {
    /// Wrap a transfer matrix, checking its shape is `d_out² × d_in²`.
    pub fn new(d_in: usize, d_out: usize, transfer: CMat) -> Result<Self> {
        if transfer.nrows() != d_out * d_out {
            return Err(Error::Dimension {
                context: "SuperOp::new (rows)",
                expected: d_out * d_out,
                actual: transfer.nrows(),
            });
        }
        if transfer.ncols() != d_in * d_in {
            return Err(Error::Dimension {
                context: "SuperOp::new (cols)",
                expected: d_in * d_in,
                actual: transfer.ncols(),
            });
        }
        Ok(Self {
            d_in,
            d_out,
            transfer,
        })
    }

    /// The identity map on `L(C^d)`.
    pub fn identity(d: usize) -> Self {
        Self {
            d_in: d,
            d_out: d,
            transfer: CMat::identity(d * d, d * d),
        }
    }

    /// The unitary conjugation `X -> U X U†` (transfer `conj(U) ⊗ U`).
    pub fn conjugation(u: &CMat) -> Result<Self> {
        if !u.is_square() {
            return Err(Error::Dimension {
                context: "SuperOp::conjugation",
                expected: u.nrows(),
                actual: u.ncols(),
            });
        }
        let d = u.nrows();
        Ok(Self {
            d_in: d,
            d_out: d,
            transfer: u.conjugate().kronecker(u),
        })
    }

    /// Build the map from Kraus operators: `Φ(X) = Σ_i K_i X K_i†`.
    /// Operators may be rectangular (`d_out × d_in`) but must share a shape.
    pub fn from_kraus(ops: &[CMat]) -> Result<Self> {
        let first = ops.first().ok_or(Error::Config(
            "from_kraus: need at least one operator".into(),
        ))?;
        let (d_out, d_in) = first.shape();
        let mut transfer = CMat::zeros(d_out * d_out, d_in * d_in);
        for k in ops {
            if k.shape() != (d_out, d_in) {
                return Err(Error::Dimension {
                    context: "SuperOp::from_kraus",
                    expected: d_out,
                    actual: k.nrows(),
                });
            }
            transfer += k.conjugate().kronecker(k);
        }
        Ok(Self {
            d_in,
            d_out,
            transfer,
        })
    }

    /// Recover the unique linear map taking each `inputs[k]` to `images[k]`.
    /// The inputs must span the full operator space `L(C^{d_in})`; the
    /// transfer matrix is the image stack times the pseudoinverse of the
    /// input stack.
    pub fn from_action(inputs: &[CMat], images: &[CMat], tol: &TolerancePolicy) -> Result<Self> {
        if inputs.is_empty() || inputs.len() != images.len() {
            return Err(Error::Config(format!(
                "from_action: {} inputs vs {} images",
                inputs.len(),
                images.len()
            )));
        }
        let d_in = inputs[0].nrows();
        let d_out = images[0].nrows();
        let k = inputs.len();
        let mut in_stack = CMat::zeros(d_in * d_in, k);
        let mut out_stack = CMat::zeros(d_out * d_out, k);
        for (col, (x, y)) in inputs.iter().zip(images).enumerate() {
            if x.shape() != (d_in, d_in) {
                return Err(Error::Dimension {
                    context: "from_action (input)",
                    expected: d_in,
                    actual: x.nrows(),
                });
            }
            if y.shape() != (d_out, d_out) {
                return Err(Error::Dimension {
                    context: "from_action (image)",
                    expected: d_out,
                    actual: y.nrows(),
                });
            }
            in_stack.set_column(col, &vec_col(x));
            out_stack.set_column(col, &vec_col(y));
        }
        let rank = numeric_rank(&in_stack, tol.rank);
        if rank < d_in * d_in {
            return Err(Error::Span {
                achieved: rank,
                required: d_in * d_in,
            });
        }
        let transfer = out_stack * pseudoinverse(&in_stack, tol.rank);
        Ok(Self {
            d_in,
            d_out,
            transfer,
        })
    }

    /// Build the map from its action on the matrix units `E_ij`, supplied by
    /// a closure. Exact (no least-squares step), used where images are known
    /// analytically.
    pub fn from_unit_action<F>(d_in: usize, d_out: usize, mut action: F) -> Result<Self>
    where
        F: FnMut(usize, usize) -> Result<CMat>,
    {
        let mut transfer = CMat::zeros(d_out * d_out, d_in * d_in);
        for j in 0..d_in {
            for i in 0..d_in {
                let image = action(i, j)?;
                if image.shape() != (d_out, d_out) {
                    return Err(Error::Dimension {
                        context: "from_unit_action",
                        expected: d_out,
                        actual: image.nrows(),
                    });
                }
                transfer.set_column(j * d_in + i, &vec_col(&image));
            }
        }
        Ok(Self {
            d_in,
            d_out,
            transfer,
        })
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    pub fn transfer(&self) -> &CMat {
        &self.transfer
    }

    /// Apply the map to an operator.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        if x.shape() != (self.d_in, self.d_in) {
            return Err(Error::Dimension {
                context: "SuperOp::apply",
                expected: self.d_in,
                actual: x.nrows(),
            });
        }
        let v = &self.transfer * vec_col(x);
        Ok(unvec_col(&v, self.d_out, self.d_out))
    }

    /// Composition `self ∘ other` (apply `other` first).
    pub fn compose(&self, other: &SuperOp) -> Result<Self> {
        if self.d_in != other.d_out {
            return Err(Error::Dimension {
                context: "SuperOp::compose",
                expected: self.d_in,
                actual: other.d_out,
            });
        }
        Ok(Self {
            d_in: other.d_in,
            d_out: self.d_out,
            transfer: &self.transfer * &other.transfer,
        })
    }

    /// Inverse map, when the transfer matrix is square and well conditioned
    /// relative to the rank tolerance.
    pub fn invert(&self, tol: &TolerancePolicy) -> Result<Self> {
        if self.d_in != self.d_out {
            return Err(Error::Dimension {
                context: "SuperOp::invert",
                expected: self.d_in,
                actual: self.d_out,
            });
        }
        let svd = self.transfer.clone().svd(true, true);
        let s_max = svd.singular_values.iter().cloned().fold(0.0, f64::max);
        let s_min = svd
            .singular_values
            .iter()
            .cloned()
            .fold(f64::INFINITY, f64::min);
        // negated form so a NaN singular value also counts as singular
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(s_min > tol.rank * s_max) || s_max == 0.0 {
            return Err(Error::SingularMap {
                smallest_singular_value: s_min,
            });
        }
        let u = svd.u.as_ref().expect("svd with u");
        let v_t = svd.v_t.as_ref().expect("svd with v_t");
        let mut scaled_ut = u.adjoint();
        for (row, &s) in svd.singular_values.iter().enumerate() {
            let mut r = scaled_ut.row_mut(row);
            r *= C64::new(1.0 / s, 0.0);
        }
        Ok(Self {
            d_in: self.d_in,
            d_out: self.d_out,
            transfer: v_t.adjoint() * scaled_ut,
        })
    }

    /// Whether `Tr(Φ(X)) = Tr(X)` for all `X` (checked on the transfer matrix).
    pub fn is_trace_preserving(&self, tol: &TolerancePolicy) -> bool {
        let c = choi(self);
        let tr_out = partial_trace_env(&c.mat, self.d_in, self.d_out)
            .expect("choi has factorized dimensions");
        max_abs(&(tr_out - CMat::identity(self.d_in, self.d_in))) <= tol.trace_for(&c.mat)
    }

    pub fn to_json(&self) -> SuperOpJson {
        SuperOpJson {
            d_in: self.d_in,
            d_out: self.d_out,
            transfer: MatrixJson::from_cmat(&self.transfer),
        }
    }

    pub fn from_json(j: &SuperOpJson) -> Result<Self> {
        Self::new(j.d_in, j.d_out, j.transfer.to_cmat()?)
    }
}

/// Input-first Choi matrix of a map, `C = Σ_ij |i⟩⟨j| ⊗ Φ(|i⟩⟨j|)`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChoiMatrix {
    d_in: usize,
    d_out: usize,
    mat: CMat,
}

impl ChoiMatrix {
    pub fn matrix(&self) -> &CMat {
        &self.mat
    }

    pub fn d_in(&self) -> usize {
        self.d_in
    }

    pub fn d_out(&self) -> usize {
        self.d_out
    }

    /// Smallest eigenvalue; errors if the Choi matrix is not Hermitian
    /// (i.e. the map is not Hermiticity-preserving).
    pub fn min_eigenvalue(&self, tol: &TolerancePolicy) -> Result<f64> {
        let (vals, _) = eig_hermitian(&self.mat, tol)?;
        Ok(vals[0])
    }

    /// Smallest eigenvalue of the Hermitian part; total (never errors), used
    /// for reporting on maps that may fail Hermiticity preservation.
    pub fn min_eigenvalue_hermitian_part(&self) -> f64 {
        let h = hermitian_part(&self.mat);
        let se = nalgebra::SymmetricEigen::new(h);
        se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min)
    }

    /// Sorted eigenvalues (ascending) of the Hermitian part.
    pub fn eigenvalues(&self) -> Vec<f64> {
        let h = hermitian_part(&self.mat);
        let se = nalgebra::SymmetricEigen::new(h);
        let mut v: Vec<f64> = se.eigenvalues.iter().cloned().collect();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// Choi matrix of a superoperator (an index reshuffle of the transfer matrix).
pub fn choi(op: &SuperOp) -> ChoiMatrix {
    let (d_in, d_out) = (op.d_in, op.d_out);
    let mut c = CMat::zeros(d_in * d_out, d_in * d_out);
    for i in 0..d_in {
        for j in 0..d_in {
            for a in 0..d_out {
                for b in 0..d_out {
                    c[(i * d_out + a, j * d_out + b)] =
                        op.transfer[(b * d_out + a, j * d_in + i)];
                }
            }
        }
    }
    ChoiMatrix { d_in, d_out, mat: c }
}

/// Inverse reshuffle: rebuild the superoperator from its Choi matrix.
pub fn choi_to_superop(c: &ChoiMatrix) -> SuperOp {
    let (d_in, d_out) = (c.d_in, c.d_out);
    let mut t = CMat::zeros(d_out * d_out, d_in * d_in);
    for i in 0..d_in {
        for j in 0..d_in {
            for a in 0..d_out {
                for b in 0..d_out {
                    t[(b * d_out + a, j * d_in + i)] = c.mat[(i * d_out + a, j * d_out + b)];
                }
            }
        }
    }
    SuperOp {
        d_in,
        d_out,
        transfer: t,
    }
}

/// Wrap an externally supplied Choi matrix.
pub fn choi_from_matrix(d_in: usize, d_out: usize, mat: CMat) -> Result<ChoiMatrix> {
    if mat.nrows() != d_in * d_out || mat.ncols() != d_in * d_out {
        return Err(Error::Dimension {
            context: "choi_from_matrix",
            expected: d_in * d_out,
            actual: mat.nrows(),
        });
    }
    Ok(ChoiMatrix { d_in, d_out, mat })
}

/// Spectral operator-sum form of a Hermiticity-preserving map:
/// `Φ(X) = Σ_i e_i Ẽ_i X Ẽ_i†` with real `e_i` (the Choi eigenvalues, sorted
/// descending) and Frobenius-orthonormal operators `Ẽ_i` (reshaped Choi
/// eigenvectors). Each `Ẽ_i`'s phase is fixed by making its largest-modulus
/// entry (first in row-major order on ties) real and positive.
#[derive(Debug, Clone)]
pub struct HermitianDecomposition {
    pub weights: Vec<f64>,
    pub operators: Vec<CMat>,
    d_in: usize,
    d_out: usize,
}

impl HermitianDecomposition {
    /// Rebuild the superoperator `Σ_i e_i Ẽ_i X Ẽ_i†`.
    pub fn reconstruct(&self) -> SuperOp {
        let mut transfer = CMat::zeros(self.d_out * self.d_out, self.d_in * self.d_in);
        for (w, op) in self.weights.iter().zip(&self.operators) {
            transfer += op.conjugate().kronecker(op) * C64::new(*w, 0.0);
        }
        SuperOp {
            d_in: self.d_in,
            d_out: self.d_out,
            transfer,
        }
    }

    /// Kraus operators `K_i = √e_i Ẽ_i` for a completely positive map.
    /// Errors with the most negative weight if any `e_i` is negative beyond
    /// the PSD tolerance; weights inside the tolerance band are dropped.
    pub fn kraus_operators(&self, tol: &TolerancePolicy) -> Result<Vec<CMat>> {
        let cutoff = tol.psd_for(self.d_in * self.d_out);
        if let Some(&w) = self
            .weights
            .iter()
            .filter(|&&w| w < -cutoff)
            .min_by(|a, b| a.total_cmp(b))
        {
            return Err(Error::NotPositive {
                min_eigenvalue: w,
                tolerance: cutoff,
            });
        }
        Ok(self
            .weights
            .iter()
            .zip(&self.operators)
            .filter(|(&w, _)| w > cutoff)
            .map(|(&w, op)| op * C64::new(w.sqrt(), 0.0))
            .collect())
    }
}

/// Decompose a Hermiticity-preserving map via its Choi eigendecomposition.
pub fn hermitian_decomposition(
    op: &SuperOp,
    tol: &TolerancePolicy,
) -> Result<HermitianDecomposition> {
    let c = choi(op);
    let (vals, vecs) = eig_hermitian(&c.mat, tol)?;
    let n = vals.len();
    let mut weights = Vec::with_capacity(n);
    let mut operators = Vec::with_capacity(n);
    // eig_hermitian sorts ascending; emit descending
    for k in (0..n).rev() {
        weights.push(vals[k]);
        let v = vecs.column(k);
        // eigenvector index (i_in * d_out + a) -> operator entry [a, i_in]
        let mut e = CMat::zeros(op.d_out, op.d_in);
        for i in 0..op.d_in {
            for a in 0..op.d_out {
                e[(a, i)] = v[i * op.d_out + a];
            }
        }
        // phase convention: largest-modulus entry real positive
        let mut best = (0usize, 0usize);
        let mut best_mod = -1.0;
        for r in 0..e.nrows() {
            for col in 0..e.ncols() {
                let m = e[(r, col)].norm();
                if m > best_mod + 1e-15 {
                    best_mod = m;
                    best = (r, col);
                }
            }
        }
        if best_mod > 0.0 {
            let entry = e[best];
            let phase = entry / entry.norm();
            e *= phase.conj();
        }
        operators.push(e);
    }
    Ok(HermitianDecomposition {
        weights,
        operators,
        d_in: op.d_in,
        d_out: op.d_out,
    })
}

/// What the classifier found, along with the witnesses it used.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub hermiticity_preserving: bool,
    pub trace_preserving: bool,
    /// Positivity on `n_samples` Haar-random pure inputs; a sampled property,
    /// not a proof of positivity.
    pub positive_sampled: bool,
    pub completely_positive: bool,
    /// Smallest eigenvalue of the (Hermitian part of the) raw Choi matrix.
    pub min_choi_eigenvalue: f64,
    pub n_samples: usize,
    /// Pure state whose image witnessed a positivity failure (lowest sample
    /// index), when one was found.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub violator: Option<MatrixJson>,
}

/// Classify a map: Hermiticity preservation and trace preservation from the
/// Choi matrix, complete positivity from its spectrum, and positivity checked
/// on seeded Haar-random pure inputs.
pub fn classify(
    op: &SuperOp,
    n_samples: usize,
    seed: u64,
    tol: &TolerancePolicy,
) -> ClassificationReport {
    let c = choi(op);
    let herm_dev = max_abs(&(&c.mat - c.mat.adjoint()));
    let hermiticity_preserving = herm_dev <= tol.herm_for(&c.mat);
    let tr_out = partial_trace_env(&c.mat, op.d_in, op.d_out).expect("choi dims factorize");
    let trace_preserving =
        max_abs(&(tr_out - CMat::identity(op.d_in, op.d_in))) <= tol.trace_for(&c.mat);
    let min_choi_eigenvalue = c.min_eigenvalue_hermitian_part();
    let completely_positive =
        hermiticity_preserving && min_choi_eigenvalue >= -tol.psd_for(op.d_in * op.d_out);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut positive_sampled = true;
    let mut violator = None;
    for _ in 0..n_samples {
        let psi = random_pure_state(op.d_in, &mut rng);
        let input = &psi * psi.adjoint();
        let out = op.apply(&input).expect("matching dimensions");
        let out_herm_dev = max_abs(&(&out - out.adjoint()));
        let h = hermitian_part(&out);
        let se = nalgebra::SymmetricEigen::new(h);
        let min_out = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        if out_herm_dev > tol.herm_for(&out) || min_out < -tol.psd_for(op.d_out) {
            positive_sampled = false;
            violator = Some(MatrixJson::from_cmat(&input));
            break;
        }
    }

    ClassificationReport {
        hermiticity_preserving,
        trace_preserving,
        positive_sampled,
        completely_positive,
        min_choi_eigenvalue,
        n_samples,
        violator,
    }
}

/// Qubit dephasing: diagonal entries kept, off-diagonal entries scaled by `q`.
pub fn dephasing_qubit(q: f64) -> SuperOp {
    let mut t = CMat::identity(4, 4);
    t[(1, 1)] = C64::new(q, 0.0);
    t[(2, 2)] = C64::new(q, 0.0);
    SuperOp {
        d_in: 2,
        d_out: 2,
        transfer: t,
    }
}

/// The transposition map `X -> Xᵀ` (positive but not completely positive).
pub fn transposition(d: usize) -> SuperOp {
    let mut t = CMat::zeros(d * d, d * d);
    for r in 0..d {
        for c in 0..d {
            t[(c * d + r, r * d + c)] = C64::new(1.0, 0.0);
        }
    }
    SuperOp {
        d_in: d,
        d_out: d,
        transfer: t,
    }
}

/// The completely depolarizing channel `X -> Tr(X) I/d`.
pub fn completely_depolarizing(d: usize) -> SuperOp {
    let mut t = CMat::zeros(d * d, d * d);
    let w = C64::new(1.0 / d as f64, 0.0);
    for i in 0..d {
        for k in 0..d {
            t[(i * d + i, k * d + k)] = w;
        }
    }
    SuperOp {
        d_in: d,
        d_out: d,
        transfer: t,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        fro_diff, matrix_unit, max_abs_diff, random_hermitian, random_unitary, tensor,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    #[test]
    fn identity_choi_spectrum_is_maximally_entangled() {
        let id = SuperOp::identity(2);
        let eigs = choi(&id).eigenvalues();
        // rank-one Choi with full weight: eigenvalues (0, 0, 0, 2)
        assert!(eigs[..3].iter().all(|&e| e.abs() < 1e-12));
        assert!((eigs[3] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn conjugation_matches_direct_sandwich() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let u = random_unitary(3, &mut rng);
        let op = SuperOp::conjugation(u.matrix()).unwrap();
        let x = random_hermitian(3, &mut rng);
        let via_op = op.apply(&x).unwrap();
        let direct = u.matrix() * &x * u.matrix().adjoint();
        assert!(max_abs_diff(&via_op, &direct) < 1e-12);
    }

    #[test]
    fn from_action_recovers_identity_from_matrix_units() {
        let t = tol();
        let mut inputs = Vec::new();
        for i in 0..2 {
            for j in 0..2 {
                inputs.push(matrix_unit(2, i, j));
            }
        }
        let op = SuperOp::from_action(&inputs, &inputs, &t).unwrap();
        assert!(max_abs_diff(op.transfer(), &CMat::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn from_action_reports_deficient_span() {
        let t = tol();
        // only three of the four qubit matrix units
        let inputs = vec![
            matrix_unit(2, 0, 0),
            matrix_unit(2, 0, 1),
            matrix_unit(2, 1, 0),
        ];
        let images = inputs.clone();
        match SuperOp::from_action(&inputs, &images, &t) {
            Err(Error::Span { achieved, required }) => {
                assert_eq!(achieved, 3);
                assert_eq!(required, 4);
            }
            other => panic!("expected SpanError, got {other:?}"),
        }
    }

    #[test]
    fn from_action_agrees_with_conjugation_on_random_basis() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let t = tol();
        let u = random_unitary(2, &mut rng);
        let reference = SuperOp::conjugation(u.matrix()).unwrap();
        // six random Hermitian inputs (overcomplete) and their images
        let inputs: Vec<CMat> = (0..6).map(|_| random_hermitian(2, &mut rng)).collect();
        let images: Vec<CMat> = inputs
            .iter()
            .map(|x| u.matrix() * x * u.matrix().adjoint())
            .collect();
        let op = SuperOp::from_action(&inputs, &images, &t).unwrap();
        assert!(max_abs_diff(op.transfer(), reference.transfer()) < 1e-9);
        // postcondition: reproduces every provided image
        for (x, y) in inputs.iter().zip(&images) {
            assert!(max_abs_diff(&op.apply(x).unwrap(), y) < 1e-9);
        }
    }

    #[test]
    fn choi_round_trip_preserves_random_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for (d_in, d_out) in [(2usize, 2usize), (2, 3), (3, 2)] {
            let transfer = crate::linalg::ginibre(d_out * d_out, d_in * d_in, &mut rng);
            let op = SuperOp::new(d_in, d_out, transfer).unwrap();
            let back = choi_to_superop(&choi(&op));
            assert!(max_abs_diff(op.transfer(), back.transfer()) < 1e-14);
        }
    }

    #[test]
    fn dephasing_choi_eigenvalues_are_one_plus_minus_q() {
        for q in [0.3, 0.9, 1.4] {
            let eigs = choi(&dephasing_qubit(q)).eigenvalues();
            assert!((eigs[0] - (1.0 - q)).abs() < 1e-12 || eigs[0].abs() < 1e-12);
            // ascending: (min(0, 1-q), 0 or 1-q, …, 1+q)
            assert!((eigs[3] - (1.0 + q)).abs() < 1e-12);
            let mut sorted = eigs.clone();
            sorted.sort_by(f64::total_cmp);
            assert!((sorted[0] - (1.0 - q).min(0.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn dephasing_is_cp_exactly_when_contractive() {
        let t = tol();
        let gentle = classify(&dephasing_qubit(0.5), 50, 7, &t);
        assert!(gentle.completely_positive);
        assert!(gentle.trace_preserving);
        assert!(gentle.hermiticity_preserving);
        assert!(gentle.positive_sampled);
        let amplifying = classify(&dephasing_qubit(1.3), 50, 7, &t);
        assert!(!amplifying.completely_positive);
        assert!((amplifying.min_choi_eigenvalue - (1.0 - 1.3)).abs() < 1e-12);
        // still positive on product inputs: sampling cannot refute positivity here
        assert!(amplifying.trace_preserving);
    }

    #[test]
    fn transposition_is_positive_but_not_cp() {
        let t = tol();
        let report = classify(&transposition(2), 200, 11, &t);
        assert!(report.hermiticity_preserving);
        assert!(report.trace_preserving);
        assert!(report.positive_sampled, "transposition is a positive map");
        assert!(!report.completely_positive);
        assert!((report.min_choi_eigenvalue - (-1.0)).abs() < 1e-12);
        assert!(report.violator.is_none());
    }

    #[test]
    fn unitary_conjugation_classifies_fully_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        let t = tol();
        let u = random_unitary(3, &mut rng);
        let report = classify(&SuperOp::conjugation(u.matrix()).unwrap(), 100, 3, &t);
        assert!(report.hermiticity_preserving);
        assert!(report.trace_preserving);
        assert!(report.positive_sampled);
        assert!(report.completely_positive);
        assert!(report.min_choi_eigenvalue > -1e-12);
    }

    #[test]
    fn sampler_finds_violator_of_non_positive_map() {
        let t = tol();
        // X -> X - 0.8 Tr(X) I/2: Hermiticity-preserving, sends pure states
        // to operators with eigenvalue -0.4
        let id = SuperOp::identity(2);
        let dep = completely_depolarizing(2);
        let transfer = id.transfer() - dep.transfer().scale(0.8);
        let op = SuperOp::new(2, 2, transfer).unwrap();
        let report = classify(&op, 50, 5, &t);
        assert!(report.hermiticity_preserving);
        assert!(!report.positive_sampled);
        assert!(!report.completely_positive);
        let witness = report.violator.expect("violator recorded").to_cmat().unwrap();
        let out = op.apply(&witness).unwrap();
        let se = nalgebra::SymmetricEigen::new(hermitian_part(&out));
        let min_out = se.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!(min_out < -1e-3, "violator really witnesses negativity");
    }

    #[test]
    fn decomposition_of_identity_is_rank_one() {
        let t = tol();
        let dec = hermitian_decomposition(&SuperOp::identity(2), &t).unwrap();
        assert!((dec.weights[0] - 2.0).abs() < 1e-12);
        assert!(dec.weights[1..].iter().all(|&w| w.abs() < 1e-12));
        // leading operator proportional to I/√2, phase-fixed to positive diagonal
        let expect = CMat::identity(2, 2).unscale(2f64.sqrt());
        assert!(max_abs_diff(&dec.operators[0], &expect) < 1e-9);
    }

    #[test]
    fn decomposition_reconstructs_hermiticity_preserving_maps() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let t = tol();
        for (d_in, d_out) in [(2usize, 2usize), (3, 2), (2, 3)] {
            // random Hermiticity-preserving map from a random Hermitian Choi matrix
            let h = random_hermitian(d_in * d_out, &mut rng);
            let op = choi_to_superop(&choi_from_matrix(d_in, d_out, h).unwrap());
            let dec = hermitian_decomposition(&op, &t).unwrap();
            assert!(fro_diff(dec.reconstruct().transfer(), op.transfer()) < 1e-9);
            // weights sorted descending, operators orthonormal
            for w in dec.weights.windows(2) {
                assert!(w[0] >= w[1] - 1e-12);
            }
            for (i, a) in dec.operators.iter().enumerate() {
                for (j, b) in dec.operators.iter().enumerate() {
                    let g = crate::linalg::hs_inner(a, b);
                    let expect = if i == j { 1.0 } else { 0.0 };
                    assert!((g - c(expect, 0.0)).norm() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn trace_preserving_decomposition_sums_to_identity() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let t = tol();
        // random CPTP map from random Kraus operators, normalized
        let k1 = crate::linalg::ginibre(3, 3, &mut rng);
        let k2 = crate::linalg::ginibre(3, 3, &mut rng);
        let s = &k1.adjoint() * &k1 + k2.adjoint() * &k2;
        // normalize: K_i -> K_i S^{-1/2}
        let (vals, vecs) = eig_hermitian(&s, &t).unwrap();
        let inv_sqrt = &vecs
            * CMat::from_diagonal(&nalgebra::DVector::from_iterator(
                3,
                vals.iter().map(|&v| c(1.0 / v.sqrt(), 0.0)),
            ))
            * vecs.adjoint();
        let op = SuperOp::from_kraus(&[&k1 * &inv_sqrt, &k2 * &inv_sqrt]).unwrap();
        assert!(op.is_trace_preserving(&t));
        let dec = hermitian_decomposition(&op, &t).unwrap();
        let mut sum = CMat::zeros(3, 3);
        for (w, e) in dec.weights.iter().zip(&dec.operators) {
            sum += e.adjoint() * e * c(*w, 0.0);
        }
        assert!(max_abs_diff(&sum, &CMat::identity(3, 3)) < 1e-9);
        // CP map: Kraus form exists and rebuilds the map
        let kraus = dec.kraus_operators(&t).unwrap();
        let rebuilt = SuperOp::from_kraus(&kraus).unwrap();
        assert!(fro_diff(rebuilt.transfer(), op.transfer()) < 1e-9);
    }

    #[test]
    fn kraus_extraction_refuses_non_cp_maps() {
        let t = tol();
        let dec = hermitian_decomposition(&dephasing_qubit(1.5), &t).unwrap();
        assert!(matches!(
            dec.kraus_operators(&t),
            Err(Error::NotPositive { .. })
        ));
    }

    #[test]
    fn kraus_phase_convention_is_deterministic() {
        let t = tol();
        // amplitude damping: K0 = diag(1, √(1-γ)), K1 = √γ |0⟩⟨1|
        let gamma: f64 = 0.35;
        let k0 = CMat::from_row_slice(
            2,
            2,
            &[c(1., 0.), c(0., 0.), c(0., 0.), c((1.0 - gamma).sqrt(), 0.)],
        );
        let k1 = CMat::from_row_slice(2, 2, &[c(0., 0.), c(gamma.sqrt(), 0.), c(0., 0.), c(0., 0.)]);
        // scramble the phases; decomposition must still emit phase-fixed operators
        let op = SuperOp::from_kraus(&[k0 * c(0.0, 1.0), k1 * c(-1.0, 0.0)]).unwrap();
        let dec = hermitian_decomposition(&op, &t).unwrap();
        for e in &dec.operators {
            let mut best = c(0., 0.);
            let mut best_mod = -1.0;
            for r in 0..2 {
                for col in 0..2 {
                    if e[(r, col)].norm() > best_mod + 1e-15 {
                        best_mod = e[(r, col)].norm();
                        best = e[(r, col)];
                    }
                }
            }
            assert!(best.im.abs() < 1e-12 && best.re > 0.0, "entry {best} not phase-fixed");
        }
    }

    #[test]
    fn compose_applies_right_operand_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let u = random_unitary(2, &mut rng);
        let first = SuperOp::conjugation(u.matrix()).unwrap();
        let second = dephasing_qubit(0.5);
        let comp = second.compose(&first).unwrap();
        let x = random_hermitian(2, &mut rng);
        let expect = second.apply(&first.apply(&x).unwrap()).unwrap();
        assert!(max_abs_diff(&comp.apply(&x).unwrap(), &expect) < 1e-12);
    }

    #[test]
    fn compose_rejects_dimension_mismatch() {
        let a = SuperOp::identity(2);
        let b = SuperOp::identity(3);
        assert!(matches!(a.compose(&b), Err(Error::Dimension { .. })));
    }

    #[test]
    fn invert_round_trips_well_conditioned_maps() {
        let t = tol();
        let op = dephasing_qubit(0.5);
        let inv = op.invert(&t).unwrap();
        let round = inv.compose(&op).unwrap();
        assert!(max_abs_diff(round.transfer(), &CMat::identity(4, 4)) < 1e-12);
    }

    #[test]
    fn invert_rejects_singular_maps() {
        let t = tol();
        // complete depolarizing has a rank-1 transfer matrix
        match completely_depolarizing(2).invert(&t) {
            Err(Error::SingularMap {
                smallest_singular_value,
            }) => assert!(smallest_singular_value < 1e-12),
            other => panic!("expected SingularMapError, got {other:?}"),
        }
    }

    #[test]
    fn apply_rejects_wrong_input_dimension() {
        let op = SuperOp::identity(2);
        assert!(matches!(
            op.apply(&CMat::zeros(3, 3)),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn superop_json_round_trip() {
        let op = dephasing_qubit(0.7);
        let text = serde_json::to_string(&op.to_json()).unwrap();
        let parsed: SuperOpJson = serde_json::from_str(&text).unwrap();
        let back = SuperOp::from_json(&parsed).unwrap();
        assert_eq!(back.transfer(), op.transfer());
    }

    #[test]
    fn product_unitary_conjugation_has_product_choi() {
        // sanity check of the system-first convention through the whole stack:
        // conjugation by u ⊗ v, applied to x ⊗ y, factorizes
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let u = random_unitary(2, &mut rng);
        let v = random_unitary(3, &mut rng);
        let op = SuperOp::conjugation(&tensor(u.matrix(), v.matrix())).unwrap();
        let x = random_hermitian(2, &mut rng);
        let y = random_hermitian(3, &mut rng);
        let out = op.apply(&tensor(&x, &y)).unwrap();
        let expect = tensor(
            &(u.matrix() * &x * u.matrix().adjoint()),
            &(v.matrix() * &y * v.matrix().adjoint()),
        );
        assert!(max_abs_diff(&out, &expect) < 1e-12);
    }
}
