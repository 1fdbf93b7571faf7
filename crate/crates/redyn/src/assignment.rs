//! Assignment maps: lifting reduced system states back to joint
//! system–environment states consistently with a declared family of
//! admissible initial states.
//!
//! Given a set `S` of joint states, the toolkit selects a maximal subfamily
//! whose marginals are linearly independent, builds the dual frame of those
//! marginals under the Hilbert–Schmidt inner product, and defines the linear
//! lift `Λ(x) = Σ_i Tr(D_i† x) ρ_SE^(i)`. On the span of the marginals this
//! is a right inverse of the environment trace; outside the span it either
//! maps the complement to zero or attaches a fixed environment state,
//! depending on the extension policy. The same machinery yields the product
//! lift `x -> x ⊗ ω` when the family is a spanning product family.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hs_inner, partial_trace_env, pseudoinverse, standard_density_basis, tensor,
    DensityMatrix, MatrixJson,
};
use crate::channels::SuperOp;
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat};

/// A declared family of admissible joint initial states on `C^{d_S} ⊗ C^{d_E}`.
#[derive(Debug, Clone)]
pub struct InitialSet {
    d_s: usize,
    d_e: usize,
    states: Vec<DensityMatrix>,
}

/// JSON form: `{"version", "d_S", "d_E", "states": [matrix, …]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct InitialSetJson {
    #[serde(default = "default_version")]
    pub version: u32,
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    pub states: Vec<MatrixJson>,
}

pub(crate) fn default_version() -> u32 {
    1
}

impl InitialSet {
    pub fn new(d_s: usize, d_e: usize, states: Vec<DensityMatrix>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Config("initial set must contain states".into()));
        }
        for s in &states {
            if s.dim() != d_s * d_e {
                return Err(Error::Dimension {
                    context: "InitialSet::new",
                    expected: d_s * d_e,
                    actual: s.dim(),
                });
            }
        }
        Ok(Self { d_s, d_e, states })
    }

    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    pub fn states(&self) -> &[DensityMatrix] {
        &self.states
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn to_json(&self) -> InitialSetJson {
        InitialSetJson {
            version: 1,
            d_s: self.d_s,
            d_e: self.d_e,
            states: self
                .states
                .iter()
                .map(|s| MatrixJson::from_cmat(s.matrix()))
                .collect(),
        }
    }

    pub fn from_json(j: &InitialSetJson, tol: &TolerancePolicy) -> Result<Self> {
        if j.version != 1 {
            return Err(Error::Config(format!(
                "unsupported initial-set format version {}",
                j.version
            )));
        }
        let states = j
            .states
            .iter()
            .map(|m| DensityMatrix::new_joint(m.to_cmat()?, j.d_s, j.d_e, tol))
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.d_s, j.d_e, states)
    }
}

/// A subfamily of an initial set whose marginals are linearly independent,
/// together with the dual frame of those marginals. The Gram matrix of the
/// selected marginals has `min eig > tol_rank · max eig`.
#[derive(Debug, Clone)]
pub struct IndependentBasis {
    d_s: usize,
    d_e: usize,
    /// Joint states `ρ_SE^(i)` of the selected subfamily.
    pub joint_states: Vec<CMat>,
    /// Their marginals `ρ_S^(i) = Tr_E ρ_SE^(i)`.
    pub reduced_states: Vec<CMat>,
    /// Indices into the original set, in selection (input) order.
    pub selected_indices: Vec<usize>,
    /// Dual frame: `Tr(D_i† ρ_S^(j)) = δ_ij` on the span of the marginals.
    dual_frame: Vec<CMat>,
}

impl IndependentBasis {
    pub fn d_s(&self) -> usize {
        self.d_s
    }

    pub fn d_e(&self) -> usize {
        self.d_e
    }

    /// Number of selected states (the dimension of the spanned subspace `V_S`).
    pub fn len(&self) -> usize {
        self.joint_states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.joint_states.is_empty()
    }

    pub fn dual_frame(&self) -> &[CMat] {
        &self.dual_frame
    }

    /// Expansion coefficients of `x` over the marginal basis (the coefficients
    /// of the orthogonal projection of `x` onto the span).
    pub fn coefficients(&self, x: &CMat) -> Result<Vec<C64>> {
        if x.shape() != (self.d_s, self.d_s) {
            return Err(Error::Dimension {
                context: "IndependentBasis::coefficients",
                expected: self.d_s,
                actual: x.nrows(),
            });
        }
        Ok(self.dual_frame.iter().map(|d| hs_inner(d, x)).collect())
    }

    /// Orthogonal projection of `x` onto the span of the marginals, plus the
    /// residual `x - P(x)`.
    pub fn project(&self, x: &CMat) -> Result<(CMat, CMat)> {
        let coeff = self.coefficients(x)?;
        let mut p = CMat::zeros(self.d_s, self.d_s);
        for (c, r) in coeff.iter().zip(&self.reduced_states) {
            p += r * *c;
        }
        let residual = x - &p;
        Ok((p, residual))
    }
}

/// Greedily select, in input order, the states whose marginals increase the
/// numerical rank of the marginal Gram matrix. Deterministic; the result
/// spans the same marginal subspace as the full set.
pub fn select_independent(set: &InitialSet, tol: &TolerancePolicy) -> Result<IndependentBasis> {
    let (d_s, d_e) = (set.d_s, set.d_e);
    let mut joint: Vec<CMat> = Vec::new();
    let mut reduced: Vec<CMat> = Vec::new();
    let mut indices: Vec<usize> = Vec::new();

    for (idx, state) in set.states.iter().enumerate() {
        let marginal = partial_trace_env(state.matrix(), d_s, d_e)?;
        // tentatively extend the Gram matrix and test full rank
        let m = reduced.len() + 1;
        let mut gram = CMat::zeros(m, m);
        for i in 0..m {
            let ri = if i < reduced.len() { &reduced[i] } else { &marginal };
            for j in 0..m {
                let rj = if j < reduced.len() { &reduced[j] } else { &marginal };
                gram[(i, j)] = hs_inner(ri, rj);
            }
        }
        let (vals, _) = eig_hermitian(&gram, tol)?;
        let max_eig = vals[m - 1].max(0.0);
        let full_rank = vals.iter().all(|&v| v > tol.rank * max_eig);
        if full_rank {
            joint.push(state.matrix().clone());
            reduced.push(marginal);
            indices.push(idx);
        }
        if joint.len() == d_s * d_s {
            break; // marginals span the whole operator space already
        }
    }

    // dual frame from the pseudoinverse of the final Gram matrix
    let m = reduced.len();
    let mut gram = CMat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            gram[(i, j)] = hs_inner(&reduced[i], &reduced[j]);
        }
    }
    let ginv = pseudoinverse(&gram, tol.rank);
    let mut dual = Vec::with_capacity(m);
    for i in 0..m {
        let mut d = CMat::zeros(d_s, d_s);
        for k in 0..m {
            d += &reduced[k] * ginv[(k, i)];
        }
        dual.push(d);
    }

    Ok(IndependentBasis {
        d_s,
        d_e,
        joint_states: joint,
        reduced_states: reduced,
        selected_indices: indices,
        dual_frame: dual,
    })
}

/// Splitting of a joint state over an independent basis: the coefficient
/// vector of its marginal plus the left-over correlation term.
#[derive(Debug, Clone)]
pub struct YDecomposition {
    /// Real expansion coefficients `a_i` of the marginal over the basis.
    pub coefficients: Vec<f64>,
    /// `Y = ρ_SE − Σ_i a_i ρ_SE^(i)`; traceless over the environment.
    pub y: CMat,
    /// `‖Tr_E Y‖_F`, the numerical residual of the marginal expansion.
    pub trace_env_residual: f64,
}

/// Expand a joint state's marginal over the basis marginals and collect the
/// remainder `Y`. The marginal must lie in the span of the basis marginals.
pub fn decompose_y(
    rho_se: &DensityMatrix,
    basis: &IndependentBasis,
    tol: &TolerancePolicy,
) -> Result<YDecomposition> {
    let d = basis.d_s * basis.d_e;
    if rho_se.dim() != d {
        return Err(Error::Dimension {
            context: "decompose_y",
            expected: d,
            actual: rho_se.dim(),
        });
    }
    let marginal = partial_trace_env(rho_se.matrix(), basis.d_s, basis.d_e)?;
    let (_, residual) = basis.project(&marginal)?;
    let res_norm = residual.norm();
    if res_norm > tol.rank * marginal.norm().max(1.0) {
        return Err(Error::NotInSpan {
            residual_norm: res_norm,
        });
    }
    // Hermitian marginal over a Hermitian frame: coefficients are real up to
    // roundoff
    let coefficients: Vec<f64> = basis.coefficients(&marginal)?.iter().map(|c| c.re).collect();
    let mut y = rho_se.matrix().clone();
    for (a, joint) in coefficients.iter().zip(&basis.joint_states) {
        y -= joint * C64::new(*a, 0.0);
    }
    let trace_env_residual = partial_trace_env(&y, basis.d_s, basis.d_e)?.norm();
    Ok(YDecomposition {
        coefficients,
        y,
        trace_env_residual,
    })
}

/// How the lift behaves off the span of the basis marginals.
#[derive(Debug, Clone)]
pub enum ExtensionPolicy {
    /// Project onto the span and map the complement to zero. Self-consistent
    /// only on the span.
    RestrictedToVS,
    /// Attach a fixed environment state to the complement: self-consistent on
    /// the whole operator space.
    ProductComplement(DensityMatrix),
}

/// The linear lift from system operators to joint operators defined by an
/// independent basis and an extension policy.
#[derive(Debug, Clone)]
pub struct AssignmentMap {
    basis: IndependentBasis,
    policy: ExtensionPolicy,
}

/// Construct the lift, checking the policy's environment state dimension.
pub fn build_assignment(basis: IndependentBasis, policy: ExtensionPolicy) -> Result<AssignmentMap> {
    if let ExtensionPolicy::ProductComplement(omega) = &policy {
        if omega.dim() != basis.d_e {
            return Err(Error::Dimension {
                context: "build_assignment (environment state)",
                expected: basis.d_e,
                actual: omega.dim(),
            });
        }
    }
    Ok(AssignmentMap { basis, policy })
}

impl AssignmentMap {
    pub fn basis(&self) -> &IndependentBasis {
        &self.basis
    }

    pub fn policy(&self) -> &ExtensionPolicy {
        &self.policy
    }

    pub fn d_s(&self) -> usize {
        self.basis.d_s
    }

    pub fn d_e(&self) -> usize {
        self.basis.d_e
    }

    /// Lift a system operator to a joint operator. Total and linear on all of
    /// `L_S`; how the component off the marginal span is treated depends on
    /// the extension policy.
    pub fn apply(&self, x: &CMat) -> Result<CMat> {
        let coeff = self.basis.coefficients(x)?;
        let d = self.basis.d_s * self.basis.d_e;
        let mut out = CMat::zeros(d, d);
        for (c, joint) in coeff.iter().zip(&self.basis.joint_states) {
            out += joint * *c;
        }
        if let ExtensionPolicy::ProductComplement(omega) = &self.policy {
            let (_, residual) = self.basis.project(x)?;
            out += tensor(&residual, omega.matrix());
        }
        Ok(out)
    }

    /// Check that `x` lies in the domain on which the lift is a right inverse
    /// of the environment trace: the marginal span for `RestrictedToVS`, all
    /// of `L_S` for `ProductComplement`.
    pub fn check_self_consistent_domain(&self, x: &CMat, tol: &TolerancePolicy) -> Result<()> {
        match &self.policy {
            ExtensionPolicy::ProductComplement(_) => Ok(()),
            ExtensionPolicy::RestrictedToVS => {
                let (_, residual) = self.basis.project(x)?;
                let res_norm = residual.norm();
                if res_norm > tol.rank * x.norm().max(1.0) {
                    Err(Error::NotInSpan {
                        residual_norm: res_norm,
                    })
                } else {
                    Ok(())
                }
            }
        }
    }

    /// The lift as an explicit superoperator `L(C^{d_S}) -> L(C^{d_S d_E})`.
    pub fn as_superop(&self) -> SuperOp {
        SuperOp::from_unit_action(self.basis.d_s, self.basis.d_s * self.basis.d_e, |i, j| {
            self.apply(&crate::linalg::matrix_unit(self.basis.d_s, i, j))
        })
        .expect("unit images have the declared dimension")
    }

    /// Evaluate the lift on `ρ = Σ_i a_i ρ_S^(i)` through the convex detour:
    /// form the state `ω_S = (ρ + Σ_i |a_i^-| ρ_S^(i)) / b`, lift it, and
    /// recombine as `b·Λ(ω_S) − Σ_i |a_i^-| ρ_SE^(i)`. Agrees with the direct
    /// linear evaluation exactly when the lift is linear — which is the
    /// property this routine exists to test numerically.
    pub fn apply_convex_route(&self, a: &[f64], tol: &TolerancePolicy) -> Result<CMat> {
        if a.len() != self.basis.len() {
            return Err(Error::Dimension {
                context: "apply_convex_route",
                expected: self.basis.len(),
                actual: a.len(),
            });
        }
        let split = convex_split(a, tol)?;
        let mut rho = CMat::zeros(self.basis.d_s, self.basis.d_s);
        for (i, &ai) in a.iter().enumerate() {
            rho += &self.basis.reduced_states[i] * C64::new(ai, 0.0);
        }
        let mut omega_s = rho;
        for &(i, ai) in &split.negative {
            omega_s += &self.basis.reduced_states[i] * C64::new(-ai, 0.0);
        }
        omega_s.unscale_mut(split.b);
        let lifted = self.apply(&omega_s)?;
        let mut out = lifted * C64::new(split.b, 0.0);
        for &(i, ai) in &split.negative {
            out -= &self.basis.joint_states[i] * C64::new(-ai, 0.0);
        }
        Ok(out)
    }
}

/// Product lift `x -> x ⊗ ω`, realized as an assignment map over a spanning
/// family of pure-state marginals tensored with `ω`.
pub fn pechukas(d_s: usize, omega: &DensityMatrix, tol: &TolerancePolicy) -> Result<AssignmentMap> {
    let states = standard_density_basis(d_s)
        .iter()
        .map(|r| {
            DensityMatrix::new_joint(tensor(r, omega.matrix()), d_s, omega.dim(), tol)
        })
        .collect::<Result<Vec<_>>>()?;
    let set = InitialSet::new(d_s, omega.dim(), states)?;
    let basis = select_independent(&set, tol)?;
    if basis.len() != d_s * d_s {
        return Err(Error::Span {
            achieved: basis.len(),
            required: d_s * d_s,
        });
    }
    build_assignment(basis, ExtensionPolicy::ProductComplement(omega.clone()))
}

/// The positive/negative split of a real coefficient vector with `Σ a_i = 1`:
/// index–value pairs of the strictly positive and strictly negative entries,
/// and the rescaling weight `b = Σ a_i⁺ = 1 + Σ |a_i⁻|`.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvexSplit {
    pub positive: Vec<(usize, f64)>,
    pub negative: Vec<(usize, f64)>,
    pub b: f64,
}

/// Split coefficients into positive and negative parts. Errors unless the
/// coefficients sum to 1 within the equality tolerance.
pub fn convex_split(a: &[f64], tol: &TolerancePolicy) -> Result<ConvexSplit> {
    let sum: f64 = a.iter().sum();
    if (sum - 1.0).abs() > tol.equality {
        return Err(Error::Normalization {
            sum,
            tolerance: tol.equality,
        });
    }
    let mut positive = Vec::new();
    let mut negative = Vec::new();
    let mut b = 0.0;
    for (i, &ai) in a.iter().enumerate() {
        if ai > 0.0 {
            positive.push((i, ai));
            b += ai;
        } else if ai < 0.0 {
            negative.push((i, ai));
        }
    }
    Ok(ConvexSplit {
        positive,
        negative,
        b,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{
        matrix_unit, max_abs_diff, random_density, random_hermitian, MatrixJson,
    };
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> C64 {
        C64::new(re, im)
    }

    fn tol() -> TolerancePolicy {
        TolerancePolicy::default()
    }

    /// Product family over the standard spanning marginals with a fixed
    /// environment state.
    fn spanning_product_set(d_s: usize, omega: &DensityMatrix) -> InitialSet {
        let t = tol();
        let states = standard_density_basis(d_s)
            .iter()
            .map(|r| {
                DensityMatrix::new_joint(tensor(r, omega.matrix()), d_s, omega.dim(), &t).unwrap()
            })
            .collect();
        InitialSet::new(d_s, omega.dim(), states).unwrap()
    }

    fn ket0_density(d: usize) -> DensityMatrix {
        let t = tol();
        DensityMatrix::new(matrix_unit(d, 0, 0), &t).unwrap()
    }

    #[test]
    fn selection_keeps_spanning_product_family() {
        let t = tol();
        let omega = ket0_density(2);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        assert_eq!(basis.len(), 4);
        assert_eq!(basis.selected_indices, vec![0, 1, 2, 3]);
    }

    #[test]
    fn selection_skips_state_with_dependent_marginal() {
        let t = tol();
        let omega = ket0_density(2);
        let p0 = tensor(&matrix_unit(2, 0, 0), omega.matrix());
        let p1 = tensor(&matrix_unit(2, 1, 1), omega.matrix());
        // third marginal is a mixture of the first two
        let mix = (&p0 + &p1).scale(0.5);
        let states = vec![
            DensityMatrix::new_joint(p0, 2, 2, &t).unwrap(),
            DensityMatrix::new_joint(p1, 2, 2, &t).unwrap(),
            DensityMatrix::new_joint(mix, 2, 2, &t).unwrap(),
        ];
        let set = InitialSet::new(2, 2, states).unwrap();
        let basis = select_independent(&set, &t).unwrap();
        assert_eq!(basis.len(), 2);
        assert_eq!(basis.selected_indices, vec![0, 1]);
    }

    #[test]
    fn dual_frame_is_biorthogonal() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let t = tol();
        let omega = random_density(3, 3, &mut rng);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        for (i, d) in basis.dual_frame().iter().enumerate() {
            for (j, r) in basis.reduced_states.iter().enumerate() {
                let g = hs_inner(d, r);
                let expect = if i == j { 1.0 } else { 0.0 };
                assert!(
                    (g - c(expect, 0.0)).norm() < 1e-9,
                    "frame not dual at ({i},{j}): {g}"
                );
            }
        }
    }

    #[test]
    fn gram_of_selected_marginals_is_well_conditioned() {
        let t = tol();
        let omega = ket0_density(2);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        let m = basis.len();
        let mut gram = CMat::zeros(m, m);
        for i in 0..m {
            for j in 0..m {
                gram[(i, j)] = hs_inner(&basis.reduced_states[i], &basis.reduced_states[j]);
            }
        }
        let (vals, _) = eig_hermitian(&gram, &t).unwrap();
        assert!(vals[0] > t.rank * vals[m - 1]);
    }

    #[test]
    fn y_vanishes_for_combinations_of_basis_states() {
        let t = tol();
        let omega = ket0_density(2);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        // probe = 0.3 ρ⁰ + 0.7 ρ¹ is again a product state over the basis
        let probe_mat =
            basis.joint_states[0].scale(0.3) + basis.joint_states[1].scale(0.7);
        let probe = DensityMatrix::new_joint(probe_mat, 2, 2, &t).unwrap();
        let dec = decompose_y(&probe, &basis, &t).unwrap();
        assert!(dec.y.norm() < 1e-10, "Y should vanish, got {}", dec.y.norm());
        assert!((dec.coefficients[0] - 0.3).abs() < 1e-10);
        assert!((dec.coefficients[1] - 0.7).abs() < 1e-10);
        assert!(dec.coefficients[2..].iter().all(|a| a.abs() < 1e-10));
        assert!(dec.trace_env_residual < 1e-10);
    }

    #[test]
    fn y_captures_correlations_and_stays_env_traceless() {
        let t = tol();
        let omega = ket0_density(2);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        // classically correlated state with maximally mixed marginal
        let mut corr = CMat::zeros(4, 4);
        corr[(0, 0)] = c(0.5, 0.);
        corr[(3, 3)] = c(0.5, 0.);
        let probe = DensityMatrix::new_joint(corr, 2, 2, &t).unwrap();
        let dec = decompose_y(&probe, &basis, &t).unwrap();
        assert!(dec.y.norm() > 0.1, "correlated probe must leave a remainder");
        assert!(dec.trace_env_residual < 1e-10);
        // coefficients reproduce the marginal: Σ a_i ρ_S^(i) = I/2
        let mut recombined = CMat::zeros(2, 2);
        for (a, r) in dec.coefficients.iter().zip(&basis.reduced_states) {
            recombined += r * c(*a, 0.);
        }
        assert!(max_abs_diff(&recombined, &CMat::identity(2, 2).scale(0.5)) < 1e-10);
    }

    #[test]
    fn decompose_rejects_marginal_outside_span() {
        let t = tol();
        let omega = ket0_density(2);
        // basis marginals span only the diagonal operators
        let states = vec![
            DensityMatrix::new_joint(tensor(&matrix_unit(2, 0, 0), omega.matrix()), 2, 2, &t)
                .unwrap(),
            DensityMatrix::new_joint(tensor(&matrix_unit(2, 1, 1), omega.matrix()), 2, 2, &t)
                .unwrap(),
        ];
        let set = InitialSet::new(2, 2, states).unwrap();
        let basis = select_independent(&set, &t).unwrap();
        assert_eq!(basis.len(), 2);
        // probe with coherent (off-diagonal) marginal
        let half = c(0.5, 0.);
        let plus = CMat::from_row_slice(2, 2, &[half, half, half, half]);
        let probe =
            DensityMatrix::new_joint(tensor(&plus, omega.matrix()), 2, 2, &t).unwrap();
        match decompose_y(&probe, &basis, &t) {
            Err(Error::NotInSpan { residual_norm }) => assert!(residual_norm > 0.1),
            other => panic!("expected NotInSpanError, got {other:?}"),
        }
    }

    #[test]
    fn assignment_maps_basis_states_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let t = tol();
        let omega = random_density(2, 2, &mut rng);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        let lam = build_assignment(basis, ExtensionPolicy::RestrictedToVS).unwrap();
        for k in 0..lam.basis().len() {
            let lifted = lam.apply(&lam.basis().reduced_states[k].clone()).unwrap();
            assert!(max_abs_diff(&lifted, &lam.basis().joint_states[k]) < 1e-12);
        }
    }

    #[test]
    fn assignment_is_right_inverse_of_env_trace_on_span() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let t = tol();
        let omega = random_density(3, 2, &mut rng);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        let lam = build_assignment(basis, ExtensionPolicy::RestrictedToVS).unwrap();
        // random element of the span (here: any system operator, basis spans)
        let x = random_hermitian(2, &mut rng);
        let lifted = lam.apply(&x).unwrap();
        let back = partial_trace_env(&lifted, 2, 3).unwrap();
        assert!(max_abs_diff(&back, &x) < 1e-10);
    }

    #[test]
    fn restricted_policy_kills_the_complement() {
        let t = tol();
        let omega = ket0_density(2);
        // diagonal-only span
        let states = vec![
            DensityMatrix::new_joint(tensor(&matrix_unit(2, 0, 0), omega.matrix()), 2, 2, &t)
                .unwrap(),
            DensityMatrix::new_joint(tensor(&matrix_unit(2, 1, 1), omega.matrix()), 2, 2, &t)
                .unwrap(),
        ];
        let set = InitialSet::new(2, 2, states).unwrap();
        let basis = select_independent(&set, &t).unwrap();
        let off_diag = matrix_unit(2, 0, 1);

        let restricted = build_assignment(basis.clone(), ExtensionPolicy::RestrictedToVS).unwrap();
        let image = restricted.apply(&off_diag).unwrap();
        assert!(image.norm() < 1e-12, "complement must map to zero");
        assert!(restricted.check_self_consistent_domain(&off_diag, &t).is_err());

        let product =
            build_assignment(basis, ExtensionPolicy::ProductComplement(omega.clone())).unwrap();
        let image = product.apply(&off_diag).unwrap();
        assert!(max_abs_diff(&image, &tensor(&off_diag, omega.matrix())) < 1e-12);
        assert!(product.check_self_consistent_domain(&off_diag, &t).is_ok());
        // right inverse on the whole operator space under the product policy
        let back = partial_trace_env(&image, 2, 2).unwrap();
        assert!(max_abs_diff(&back, &off_diag) < 1e-12);
    }

    #[test]
    fn product_lift_tensors_every_operator() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let t = tol();
        for d_s in [2usize, 3] {
            let omega = random_density(2, 2, &mut rng);
            let lam = pechukas(d_s, &omega, &t).unwrap();
            // Hermitian and non-Hermitian inputs alike
            let x = random_hermitian(d_s, &mut rng);
            let lifted = lam.apply(&x).unwrap();
            assert!(max_abs_diff(&lifted, &tensor(&x, omega.matrix())) < 1e-10);
            let g = crate::linalg::ginibre(d_s, d_s, &mut rng);
            let lifted_g = lam.apply(&g).unwrap();
            assert!(max_abs_diff(&lifted_g, &tensor(&g, omega.matrix())) < 1e-10);
        }
    }

    #[test]
    fn assignment_superop_agrees_with_apply() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let t = tol();
        let omega = random_density(2, 1, &mut rng);
        let lam = pechukas(2, &omega, &t).unwrap();
        let op = lam.as_superop();
        assert_eq!(op.d_in(), 2);
        assert_eq!(op.d_out(), 4);
        let x = random_hermitian(2, &mut rng);
        assert!(max_abs_diff(&op.apply(&x).unwrap(), &lam.apply(&x).unwrap()) < 1e-10);
    }

    #[test]
    fn convex_split_of_mixed_signs() {
        let t = tol();
        let split = convex_split(&[2.0, -1.0], &t).unwrap();
        assert_eq!(split.positive, vec![(0, 2.0)]);
        assert_eq!(split.negative, vec![(1, -1.0)]);
        assert!((split.b - 2.0).abs() < 1e-12);
        // b = 1 + Σ|a⁻| always
        let neg_sum: f64 = split.negative.iter().map(|(_, a)| -a).sum();
        assert!((split.b - (1.0 + neg_sum)).abs() < 1e-12);
    }

    #[test]
    fn convex_split_of_proper_mixture_has_no_negative_part() {
        let t = tol();
        let split = convex_split(&[0.5, 0.5], &t).unwrap();
        assert!(split.negative.is_empty());
        assert!((split.b - 1.0).abs() < 1e-12);
    }

    #[test]
    fn convex_split_rejects_unnormalized_coefficients() {
        let t = tol();
        match convex_split(&[0.6, 0.6], &t) {
            Err(Error::Normalization { sum, .. }) => assert!((sum - 1.2).abs() < 1e-12),
            other => panic!("expected NormalizationError, got {other:?}"),
        }
    }

    #[test]
    fn convex_route_matches_direct_linear_evaluation() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let t = tol();
        let omega = random_density(2, 2, &mut rng);
        let set = spanning_product_set(2, &omega);
        let basis = select_independent(&set, &t).unwrap();
        let lam = build_assignment(basis, ExtensionPolicy::RestrictedToVS).unwrap();
        let a = [1.4, -0.9, 0.3, 0.2]; // sums to 1, mixed signs
        let via_route = lam.apply_convex_route(&a, &t).unwrap();
        let mut direct = CMat::zeros(4, 4);
        for (ai, joint) in a.iter().zip(&lam.basis().joint_states) {
            direct += joint * c(*ai, 0.);
        }
        assert!(max_abs_diff(&via_route, &direct) < 1e-10);
    }

    #[test]
    fn initial_set_json_round_trip() {
        let t = tol();
        let omega = ket0_density(3);
        let set = spanning_product_set(2, &omega);
        let text = serde_json::to_string(&set.to_json()).unwrap();
        let parsed: InitialSetJson = serde_json::from_str(&text).unwrap();
        let back = InitialSet::from_json(&parsed, &t).unwrap();
        assert_eq!(back.d_s(), 2);
        assert_eq!(back.d_e(), 3);
        assert_eq!(back.len(), set.len());
        for (a, b) in back.states().iter().zip(set.states()) {
            assert!(max_abs_diff(a.matrix(), b.matrix()) < 1e-15);
        }
    }

    #[test]
    fn initial_set_rejects_invalid_payloads() {
        let t = tol();
        // wrong joint dimension
        let bad = InitialSetJson {
            version: 1,
            d_s: 2,
            d_e: 2,
            states: vec![MatrixJson::from_cmat(&CMat::identity(2, 2).scale(0.5))],
        };
        assert!(InitialSet::from_json(&bad, &t).is_err());
        // unsupported version
        let versioned = InitialSetJson {
            version: 9,
            d_s: 2,
            d_e: 2,
            states: vec![MatrixJson::from_cmat(&CMat::identity(4, 4).scale(0.25))],
        };
        assert!(matches!(
            InitialSet::from_json(&versioned, &t),
            Err(Error::Config(_))
        ));
    }
}
