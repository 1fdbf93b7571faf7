//! Reduced dynamics induced by joint unitary evolution through an assignment
//! map, and the diagnostics that decide whether such dynamics are consistent
//! and completely positive.
//!
//! The central object is the composite `x -> Tr_E( U Λ(x) U† )`: lift a
//! system operator with the assignment map, conjugate by the joint unitary,
//! trace out the environment. The module provides
//!
//! * consistency checks: does the joint unitary annihilate (under the
//!   environment trace) every correlation remainder `Y` the initial family
//!   can produce, so that the reduced map is well defined on marginals;
//! * linearity witnesses: does the lifted-and-evolved marginal reproduce the
//!   true evolution of each admissible joint state;
//! * the decomposition of a product-lift reduced map into a convex family of
//!   completely positive maps, one per environment eigenvector;
//! * a randomized certification driver that samples joint unitaries and
//!   environment states and confirms the product-family reduced maps are
//!   trace preserving, completely positive, and convex-route consistent.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::assignment::{
    decompose_y, pechukas, select_independent, AssignmentMap, IndependentBasis, InitialSet,
};
use crate::channels::{choi, SuperOp};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hs_inner, matrix_unit, partial_trace_env, random_density, random_unitary,
    swap_gate, tensor, DensityMatrix, MatrixJson, UnitaryMatrix,
};
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat, CVec};

/// `U ρ_SE U†`, revalidated as a density matrix.
pub fn evolve_joint(
    rho_se: &DensityMatrix,
    u: &UnitaryMatrix,
    tol: &TolerancePolicy,
) -> Result<DensityMatrix> {
    if rho_se.dim() != u.dim() {
        return Err(Error::Dimension {
            context: "evolve_joint",
            expected: u.dim(),
            actual: rho_se.dim(),
        });
    }
    let evolved = u.conjugate(rho_se.matrix());
    match rho_se.dims() {
        Some((ds, de)) => DensityMatrix::new_joint(evolved, ds, de, tol),
        None => DensityMatrix::new(evolved, tol),
    }
}

/// `Tr_E( U ρ_SE U† )`: the exact reduced state after joint evolution.
pub fn reduced_dynamics(
    rho_se: &DensityMatrix,
    u: &UnitaryMatrix,
    d_s: usize,
    d_e: usize,
    tol: &TolerancePolicy,
) -> Result<DensityMatrix> {
    if rho_se.dim() != d_s * d_e || u.dim() != d_s * d_e {
        return Err(Error::Dimension {
            context: "reduced_dynamics",
            expected: d_s * d_e,
            actual: rho_se.dim(),
        });
    }
    let evolved = u.conjugate(rho_se.matrix());
    DensityMatrix::new(partial_trace_env(&evolved, d_s, d_e)?, tol)
}

/// The reduced map `x -> Tr_E( U Λ(x) U† )` as an explicit superoperator on
/// the system.
pub fn induced_map(lam: &AssignmentMap, u: &UnitaryMatrix) -> Result<SuperOp> {
    let (d_s, d_e) = (lam.d_s(), lam.d_e());
    if u.dim() != d_s * d_e {
        return Err(Error::Dimension {
            context: "induced_map",
            expected: d_s * d_e,
            actual: u.dim(),
        });
    }
    SuperOp::from_unit_action(d_s, d_s, |i, j| {
        let lifted = lam.apply(&matrix_unit(d_s, i, j))?;
        partial_trace_env(&u.conjugate(&lifted), d_s, d_e)
    })
}

/// Orthonormalize a list of matrices in the Hilbert–Schmidt inner product,
/// dropping numerically dependent directions.
pub(crate) fn orthonormalize_hs(mats: &[CMat], rank_tol: f64) -> Vec<CMat> {
    let mut basis: Vec<CMat> = Vec::new();
    for m in mats {
        let scale = m.norm();
        if scale <= rank_tol {
            continue;
        }
        let mut v = m.clone();
        // two rounds of Gram–Schmidt for numerical stability
        for _ in 0..2 {
            for b in &basis {
                let overlap = hs_inner(b, &v);
                v -= b * overlap;
            }
        }
        let norm = v.norm();
        if norm > rank_tol * scale.max(1.0) {
            v.unscale_mut(norm);
            basis.push(v);
        }
    }
    basis
}

/// Whether a joint unitary sends every correlation remainder of the family
/// into the kernel of the environment trace.
#[derive(Debug, Clone)]
pub struct UConsistencyReport {
    /// `max_k ‖Tr_E( U Ŷ_k U† )‖_F` over an orthonormal basis of remainders.
    pub max_violation: f64,
    /// `max_violation` within the equality tolerance.
    pub consistent: bool,
    /// Dimension of the span of the correlation remainders.
    pub residual_dim: usize,
    /// The orthonormal remainder attaining the maximal violation.
    pub witness: Option<CMat>,
}

/// Test whether `U` is consistent with the initial family: every state of the
/// family decomposes as `Σ a_i ρ_SE^(i) + Y`, and the unitary must keep each
/// such `Y` invisible to the environment trace. When it does, the reduced map
/// depends only on the marginal and is therefore well defined and linear.
pub fn u_consistency(
    set: &InitialSet,
    basis: &IndependentBasis,
    u: &UnitaryMatrix,
    tol: &TolerancePolicy,
) -> Result<UConsistencyReport> {
    let (d_s, d_e) = (set.d_s(), set.d_e());
    if basis.d_s() != d_s || basis.d_e() != d_e {
        return Err(Error::Dimension {
            context: "u_consistency (basis)",
            expected: d_s * d_e,
            actual: basis.d_s() * basis.d_e(),
        });
    }
    if u.dim() != d_s * d_e {
        return Err(Error::Dimension {
            context: "u_consistency (unitary)",
            expected: d_s * d_e,
            actual: u.dim(),
        });
    }
    let mut remainders = Vec::new();
    for state in set.states() {
        let dec = decompose_y(state, basis, tol)?;
        remainders.push(dec.y);
    }
    let residual_basis = orthonormalize_hs(&remainders, tol.rank);
    let mut max_violation: f64 = 0.0;
    let mut witness = None;
    for y in &residual_basis {
        let violation = partial_trace_env(&u.conjugate(y), d_s, d_e)?.norm();
        if violation > max_violation {
            max_violation = violation;
            witness = Some(y.clone());
        }
    }
    Ok(UConsistencyReport {
        max_violation,
        consistent: max_violation <= tol.equality,
        residual_dim: residual_basis.len(),
        witness,
    })
}

/// Per-state deviation between the assignment-based reduced map and the true
/// reduced dynamics of the family.
#[derive(Debug, Clone)]
pub struct LinearityWitnessReport {
    /// Largest Frobenius deviation over the family.
    pub max_deviation: f64,
    /// Index (into the initial set) of the state attaining it.
    pub worst_probe: usize,
    /// Deviation for every state, in set order.
    pub per_probe: Vec<f64>,
}

/// For each admissible joint state, compare `Tr_E(U Λ(Tr_E ρ_SE) U†)` with
/// `Tr_E(U ρ_SE U†)`. Nonzero deviations witness that no linear reduced map
/// reproduces the family's dynamics — the assignment forgot correlations the
/// unitary can see.
pub fn linearity_witness(
    lam: &AssignmentMap,
    set: &InitialSet,
    u: &UnitaryMatrix,
    tol: &TolerancePolicy,
) -> Result<LinearityWitnessReport> {
    let (d_s, d_e) = (lam.d_s(), lam.d_e());
    if set.d_s() != d_s || set.d_e() != d_e {
        return Err(Error::Dimension {
            context: "linearity_witness (set)",
            expected: d_s * d_e,
            actual: set.d_s() * set.d_e(),
        });
    }
    if u.dim() != d_s * d_e {
        return Err(Error::Dimension {
            context: "linearity_witness (unitary)",
            expected: d_s * d_e,
            actual: u.dim(),
        });
    }
    let mut per_probe = Vec::with_capacity(set.len());
    for state in set.states() {
        let marginal = partial_trace_env(state.matrix(), d_s, d_e)?;
        lam.check_self_consistent_domain(&marginal, tol)?;
        let predicted = partial_trace_env(&u.conjugate(&lam.apply(&marginal)?), d_s, d_e)?;
        let actual = partial_trace_env(&u.conjugate(state.matrix()), d_s, d_e)?;
        per_probe.push((&predicted - &actual).norm());
    }
    let (worst_probe, max_deviation) = per_probe
        .iter()
        .enumerate()
        .fold((0usize, 0.0f64), |(wi, wv), (i, &v)| {
            if v > wv { (i, v) } else { (wi, wv) }
        });
    Ok(LinearityWitnessReport {
        max_deviation,
        worst_probe,
        per_probe,
    })
}

/// A reduced map written as a weighted family of completely positive maps,
/// one per environment eigenvector.
#[derive(Debug, Clone)]
pub struct CPFamily {
    /// Environment eigenvalues, descending; strictly positive entries only.
    pub weights: Vec<f64>,
    /// `Φ_k(x) = Tr_E( U (x ⊗ |e_k⟩⟨e_k|) U† )`, completely positive each.
    pub maps: Vec<SuperOp>,
    /// The environment eigenvectors `|e_k⟩`.
    pub env_states: Vec<CVec>,
}

impl CPFamily {
    /// `Σ_k w_k Φ_k`: the reduced map of the product lift with this
    /// environment state.
    pub fn summed(&self) -> Result<SuperOp> {
        let first = self.maps.first().ok_or(Error::InvalidState {
            reason: "empty map family".into(),
        })?;
        let (d_in, d_out) = (first.d_in(), first.d_out());
        let mut transfer = CMat::zeros(d_out * d_out, d_in * d_in);
        for (w, m) in self.weights.iter().zip(&self.maps) {
            transfer += m.transfer() * C64::new(*w, 0.0);
        }
        SuperOp::new(d_in, d_out, transfer)
    }
}

/// Decompose the product-lift reduced map `x -> Tr_E(U (x ⊗ ω) U†)` over the
/// spectral decomposition of `ω`. Each component is completely positive by
/// construction, exhibiting the full map as a convex combination of CP maps.
pub fn cp_family(
    u: &UnitaryMatrix,
    omega: &DensityMatrix,
    d_s: usize,
    tol: &TolerancePolicy,
) -> Result<CPFamily> {
    let d_e = omega.dim();
    if u.dim() != d_s * d_e {
        return Err(Error::Dimension {
            context: "cp_family",
            expected: d_s * d_e,
            actual: u.dim(),
        });
    }
    let (vals, vecs) = eig_hermitian(omega.matrix(), tol)?;
    let cutoff = tol.psd_for(d_e);
    let mut weights = Vec::new();
    let mut maps = Vec::new();
    let mut env_states = Vec::new();
    // eigenvalues ascending; walk backwards for descending weights
    for k in (0..d_e).rev() {
        let w = vals[k];
        if w <= cutoff {
            continue;
        }
        let e_k: CVec = vecs.column(k).into_owned();
        let projector = &e_k * e_k.adjoint();
        let map = SuperOp::from_unit_action(d_s, d_s, |i, j| {
            let joint = tensor(&matrix_unit(d_s, i, j), &projector);
            partial_trace_env(&u.conjugate(&joint), d_s, d_e)
        })?;
        weights.push(w);
        maps.push(map);
        env_states.push(e_k);
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > tol.trace * (d_e as f64) {
        return Err(Error::InvalidState {
            reason: format!("retained environment weights sum to {total}, expected 1"),
        });
    }
    Ok(CPFamily {
        weights,
        maps,
        env_states,
    })
}

/// A fixed battery of structured joint unitaries that exercise the corners
/// randomized sampling tends to miss: non-interacting, maximally exchanging,
/// classically controlled, and partially exchanging dynamics.
pub fn adversarial_unitaries(d_s: usize, d_e: usize) -> Vec<(String, UnitaryMatrix)> {
    let d = d_s * d_e;
    let mut out = Vec::new();
    out.push(("identity".to_string(), UnitaryMatrix::identity(d)));

    // |i,j> -> |i, (j+i) mod d_E>: environment shifted by the system label
    let mut shift = CMat::zeros(d, d);
    for i in 0..d_s {
        for j in 0..d_e {
            shift[(i * d_e + (j + i) % d_e, i * d_e + j)] = C64::new(1.0, 0.0);
        }
    }
    out.push(("controlled-shift".to_string(), unchecked_unitary(shift)));

    // diagonal phases e^{2πi·ij/d}
    let mut phase = CMat::zeros(d, d);
    for i in 0..d_s {
        for j in 0..d_e {
            let theta = 2.0 * std::f64::consts::PI * (i * j) as f64 / d as f64;
            phase[(i * d_e + j, i * d_e + j)] = C64::new(theta.cos(), theta.sin());
        }
    }
    out.push(("controlled-phase".to_string(), unchecked_unitary(phase)));

    if d_s == d_e {
        let s = swap_gate(d_s);
        out.push(("swap".to_string(), unchecked_unitary(s.clone())));
        // cos θ · I + i sin θ · SWAP is unitary because SWAP is a Hermitian
        // involution; θ = π/4 mixes the factors half way
        let theta = std::f64::consts::FRAC_PI_4;
        let partial =
            CMat::identity(d, d) * C64::new(theta.cos(), 0.0) + s * C64::new(0.0, theta.sin());
        out.push(("partial-swap".to_string(), unchecked_unitary(partial)));
    }
    out
}

fn unchecked_unitary(m: CMat) -> UnitaryMatrix {
    let t = TolerancePolicy::default();
    UnitaryMatrix::new(m, &t).expect("construction is unitary by design")
}

/// Configuration for the randomized product-family certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationConfig {
    #[serde(default = "crate::assignment::default_version")]
    pub version: u32,
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    /// Number of Haar-random joint unitaries to draw.
    pub n_unitaries: usize,
    /// Number of random mixed-sign coefficient probes per unitary.
    #[serde(default = "default_probes")]
    pub n_probes: usize,
    pub seed: u64,
    /// Rank of the sampled environment states (default: full rank).
    #[serde(default)]
    pub env_rank: Option<usize>,
    /// Also run the fixed battery of structured unitaries (default: true).
    #[serde(default = "default_true")]
    pub include_adversarial: bool,
}

fn default_true() -> bool {
    true
}

fn default_probes() -> usize {
    4
}

/// Outcome of one certification trial.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrialReport {
    pub label: String,
    pub min_choi_eigenvalue: f64,
    pub trace_preserving: bool,
    pub completely_positive: bool,
    pub max_probe_deviation: f64,
    pub consistent: bool,
}

/// A failing trial, bundled with enough data to replay it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CounterexampleBundle {
    pub label: String,
    pub unitary: MatrixJson,
    pub env_state: MatrixJson,
    pub min_choi_eigenvalue: f64,
    pub max_probe_deviation: f64,
    pub probe: Option<Vec<f64>>,
}

/// Aggregate result of a certification run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertificationReport {
    #[serde(rename = "d_S")]
    pub d_s: usize,
    #[serde(rename = "d_E")]
    pub d_e: usize,
    pub n_trials: usize,
    pub min_choi_eigenvalue: f64,
    pub max_probe_deviation: f64,
    pub all_trace_preserving: bool,
    pub all_consistent: bool,
    pub pass: bool,
    pub trials: Vec<TrialReport>,
    pub counterexample: Option<CounterexampleBundle>,
}

struct TrialSpec {
    label: String,
    u: UnitaryMatrix,
    omega: DensityMatrix,
    probes: Vec<Vec<f64>>,
}

/// Sample joint unitaries and environment states, build the product-lift
/// reduced map for each, and verify it is trace preserving, completely
/// positive, convex-route consistent on mixed-sign probes, and U-consistent
/// over its generating family. Deterministic for a fixed seed regardless of
/// thread count.
pub fn certify_product_families(
    cfg: &CertificationConfig,
    tol: &TolerancePolicy,
) -> Result<CertificationReport> {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};

    if cfg.version != 1 {
        return Err(Error::Config(format!(
            "unsupported certification config version {}",
            cfg.version
        )));
    }
    let (d_s, d_e) = (cfg.d_s, cfg.d_e);
    if d_s < 2 || d_e < 1 {
        return Err(Error::Config(format!(
            "certification needs d_S >= 2 and d_E >= 1, got ({d_s}, {d_e})"
        )));
    }
    let env_rank = cfg.env_rank.unwrap_or(d_e);
    if env_rank < 1 || env_rank > d_e {
        return Err(Error::Config(format!(
            "environment rank {env_rank} out of range 1..={d_e}"
        )));
    }

    // Sequential, seeded generation of every random object; the analysis
    // below is then order-independent and can run on any number of threads.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(cfg.seed);
    let n_coeff = d_s * d_s;
    let gen_probes = |rng: &mut rand_chacha::ChaCha8Rng| -> Vec<Vec<f64>> {
        (0..cfg.n_probes)
            .map(|_| {
                let mut a: Vec<f64> =
                    (0..n_coeff).map(|_| StandardNormal.sample(rng)).collect();
                let shift = (1.0 - a.iter().sum::<f64>()) / n_coeff as f64;
                for ai in &mut a {
                    *ai += shift;
                }
                a
            })
            .collect()
    };

    let mut specs: Vec<TrialSpec> = Vec::new();
    if cfg.include_adversarial {
        for (label, u) in adversarial_unitaries(d_s, d_e) {
            let omega = random_density(d_e, env_rank, &mut rng);
            let probes = gen_probes(&mut rng);
            specs.push(TrialSpec {
                label,
                u,
                omega,
                probes,
            });
        }
    }
    for t in 0..cfg.n_unitaries {
        let u = random_unitary(d_s * d_e, &mut rng);
        let omega = random_density(d_e, env_rank, &mut rng);
        let probes = gen_probes(&mut rng);
        specs.push(TrialSpec {
            label: format!("haar-{t}"),
            u,
            omega,
            probes,
        });
    }

    let analyzed: Vec<(TrialReport, Option<CounterexampleBundle>)> = specs
        .par_iter()
        .map(|spec| analyze_trial(spec, d_s, d_e, tol))
        .collect::<Result<Vec<_>>>()?;

    let mut trials = Vec::with_capacity(analyzed.len());
    let mut counterexample = None;
    let mut min_choi = f64::INFINITY;
    let mut max_dev: f64 = 0.0;
    let mut all_tp = true;
    let mut all_consistent = true;
    for (report, bundle) in analyzed {
        min_choi = min_choi.min(report.min_choi_eigenvalue);
        max_dev = max_dev.max(report.max_probe_deviation);
        all_tp &= report.trace_preserving;
        all_consistent &= report.consistent;
        if counterexample.is_none() {
            counterexample = bundle;
        }
        trials.push(report);
    }
    Ok(CertificationReport {
        d_s,
        d_e,
        n_trials: trials.len(),
        min_choi_eigenvalue: min_choi,
        max_probe_deviation: max_dev,
        all_trace_preserving: all_tp,
        all_consistent,
        pass: counterexample.is_none(),
        trials,
        counterexample,
    })
}

fn analyze_trial(
    spec: &TrialSpec,
    d_s: usize,
    d_e: usize,
    tol: &TolerancePolicy,
) -> Result<(TrialReport, Option<CounterexampleBundle>)> {
    let lam = pechukas(d_s, &spec.omega, tol)?;
    let op = induced_map(&lam, &spec.u)?;
    let min_choi = choi(&op).min_eigenvalue(tol)?;
    let completely_positive = min_choi >= -tol.psd_for(d_s * d_s);
    let trace_preserving = op.is_trace_preserving(tol);

    // convex detour vs. direct linear evaluation, pushed through the dynamics
    let mut max_probe_deviation: f64 = 0.0;
    let mut worst_probe: Option<Vec<f64>> = None;
    for a in &spec.probes {
        let mut rho = CMat::zeros(d_s, d_s);
        for (ai, r) in a.iter().zip(&lam.basis().reduced_states) {
            rho += r * C64::new(*ai, 0.0);
        }
        let direct = partial_trace_env(&spec.u.conjugate(&lam.apply(&rho)?), d_s, d_e)?;
        let routed = partial_trace_env(
            &spec.u.conjugate(&lam.apply_convex_route(a, tol)?),
            d_s,
            d_e,
        )?;
        let dev = (&direct - &routed).norm();
        if dev > max_probe_deviation {
            max_probe_deviation = dev;
            worst_probe = Some(a.clone());
        }
    }
    let probes_ok = max_probe_deviation <= tol.equality;

    // the generating family is a product family, so every unitary must be
    // consistent with it; check rather than assume
    let product_set = InitialSet::new(
        d_s,
        d_e,
        lam.basis()
            .joint_states
            .iter()
            .map(|m| DensityMatrix::new_joint(m.clone(), d_s, d_e, tol))
            .collect::<Result<Vec<_>>>()?,
    )?;
    let basis = select_independent(&product_set, tol)?;
    let consistent = u_consistency(&product_set, &basis, &spec.u, tol)?.consistent;

    let report = TrialReport {
        label: spec.label.clone(),
        min_choi_eigenvalue: min_choi,
        trace_preserving,
        completely_positive,
        max_probe_deviation,
        consistent,
    };
    let bundle = if !(completely_positive && trace_preserving && probes_ok && consistent) {
        Some(CounterexampleBundle {
            label: spec.label.clone(),
            unitary: MatrixJson::from_cmat(spec.u.matrix()),
            env_state: MatrixJson::from_cmat(spec.omega.matrix()),
            min_choi_eigenvalue: min_choi,
            max_probe_deviation,
            probe: worst_probe.filter(|_| !probes_ok),
        })
    } else {
        None
    };
    Ok((report, bundle))
}
