//! Piecewise-constant generators in Gorini–Kossakowski–Sudarshan–Lindblad
//! form, their propagators, canonical-form extraction, and the two-time
//! divisibility scan that hunts for intermediate maps with negative Choi
//! eigenvalues.
//!
//! A generator acts as
//! `L(ρ) = −i[H, ρ] + Σ_k γ_k (A_k ρ A_k† − ½{A_k† A_k, ρ})`
//! with real — possibly negative — rates `γ_k`. Schedules are lists of
//! contiguous segments, each holding a constant generator; on a segment the
//! propagator is the exact matrix exponential, so substep counts only affect
//! how a smooth rate profile is sampled into segments, not the per-segment
//! arithmetic.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::channels::{choi, SuperOp};
use crate::error::{Error, Result};
use crate::linalg::{
    eig_hermitian, hs_inner, is_hermitian, max_abs_diff, vec_col, MatrixJson,
};
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat};

/// Transfer matrix of the generator with Hamiltonian `h` and jump terms
/// `channels = [(A_k, γ_k), …]`, in the column-stacking convention.
pub fn gksl_superop(h: &CMat, channels: &[(CMat, f64)], tol: &TolerancePolicy) -> Result<CMat> {
    let d = h.nrows();
    if h.ncols() != d {
        return Err(Error::Dimension {
            context: "gksl_superop (Hamiltonian)",
            expected: d,
            actual: h.ncols(),
        });
    }
    let herm_tol = tol.herm_for(h);
    if !is_hermitian(h, herm_tol) {
        let dev = max_abs_diff(h, &h.adjoint());
        return Err(Error::Hermiticity {
            deviation: dev,
            tolerance: herm_tol,
        });
    }
    let id = CMat::identity(d, d);
    // vec(AXB) = (Bᵀ ⊗ A) vec(X):
    //   −i[H, ρ]  ->  −i (I ⊗ H − Hᵀ ⊗ I)
    let mut l = (id.kronecker(h) - h.transpose().kronecker(&id)) * C64::new(0.0, -1.0);
    for (a, gamma) in channels {
        if a.shape() != (d, d) {
            return Err(Error::Dimension {
                context: "gksl_superop (jump operator)",
                expected: d,
                actual: a.nrows(),
            });
        }
        // A ρ A†  ->  conj(A) ⊗ A;  {A†A, ρ}  ->  I ⊗ A†A + (A†A)ᵀ ⊗ I
        let aa = a.adjoint() * a;
        let sandwich = a.conjugate().kronecker(a);
        let anti = id.kronecker(&aa) + aa.transpose().kronecker(&id);
        l += (sandwich - anti * C64::new(0.5, 0.0)) * C64::new(*gamma, 0.0);
    }
    Ok(l)
}

/// One constant-generator stretch of a schedule.
#[derive(Debug, Clone)]
pub struct Segment {
    pub t_start: f64,
    pub t_end: f64,
    pub hamiltonian: CMat,
    /// Jump operators with their (possibly negative) rates.
    pub channels: Vec<(CMat, f64)>,
}

/// A time-dependent generator given as contiguous constant segments starting
/// at `t = 0`.
#[derive(Debug, Clone)]
pub struct GkslGenerator {
    d: usize,
    segments: Vec<Segment>,
    /// Cached transfer matrix of each segment's generator.
    transfers: Vec<CMat>,
}

/// JSON form of one jump term: `{"A": matrix, "gamma": rate}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LindbladTermJson {
    #[serde(rename = "A")]
    pub a: MatrixJson,
    pub gamma: f64,
}

/// JSON form of one segment.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SegmentJson {
    pub t_start: f64,
    pub t_end: f64,
    #[serde(rename = "H")]
    pub h: MatrixJson,
    pub lindblad: Vec<LindbladTermJson>,
}

/// JSON form of a schedule: `{"version", "d", "segments": […]}`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GeneratorJson {
    #[serde(default = "crate::assignment::default_version")]
    pub version: u32,
    pub d: usize,
    pub segments: Vec<SegmentJson>,
}

impl GkslGenerator {
    /// Validate and cache a schedule. Segments must start at `t = 0`, be
    /// contiguous, and each carry a Hermitian `d × d` Hamiltonian and
    /// `d × d` jump operators.
    pub fn new(d: usize, segments: Vec<Segment>, tol: &TolerancePolicy) -> Result<Self> {
        if d == 0 {
            return Err(Error::Config("generator dimension must be positive".into()));
        }
        if segments.is_empty() {
            return Err(Error::Config("schedule must contain segments".into()));
        }
        if segments[0].t_start != 0.0 {
            return Err(Error::Config(format!(
                "schedule must start at t = 0, got t_start = {}",
                segments[0].t_start
            )));
        }
        for (k, seg) in segments.iter().enumerate() {
            // negated form so NaN endpoints are also rejected
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(seg.t_end > seg.t_start) {
                return Err(Error::Config(format!(
                    "segment {k} has empty or reversed time interval [{}, {}]",
                    seg.t_start, seg.t_end
                )));
            }
            if k + 1 < segments.len() && segments[k + 1].t_start != seg.t_end {
                return Err(Error::Config(format!(
                    "segments {k} and {} are not contiguous: {} vs {}",
                    k + 1,
                    seg.t_end,
                    segments[k + 1].t_start
                )));
            }
        }
        let transfers = segments
            .iter()
            .map(|seg| gksl_superop(&seg.hamiltonian, &seg.channels, tol))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            d,
            segments,
            transfers,
        })
    }

    pub fn d(&self) -> usize {
        self.d
    }

    pub fn segments(&self) -> &[Segment] {
        &self.segments
    }

    pub fn total_time(&self) -> f64 {
        self.segments.last().map(|s| s.t_end).unwrap_or(0.0)
    }

    /// Segment boundaries, `0 = t_0 < t_1 < … < t_n`.
    pub fn boundaries(&self) -> Vec<f64> {
        let mut b = vec![0.0];
        b.extend(self.segments.iter().map(|s| s.t_end));
        b
    }

    /// Index of the segment whose half-open interval contains `t`; the final
    /// endpoint belongs to the last segment.
    pub fn segment_index_at(&self, t: f64) -> Result<usize> {
        let total = self.total_time();
        if !(0.0..=total).contains(&t) {
            return Err(Error::TimeRange {
                t,
                t_min: 0.0,
                t_max: total,
            });
        }
        for (k, seg) in self.segments.iter().enumerate() {
            if t < seg.t_end {
                return Ok(k);
            }
        }
        Ok(self.segments.len() - 1)
    }

    /// The generator at time `t` as a superoperator.
    pub fn generator_superop(&self, t: f64) -> Result<SuperOp> {
        let k = self.segment_index_at(t)?;
        SuperOp::new(self.d, self.d, self.transfers[k].clone())
    }

    pub fn to_json(&self) -> GeneratorJson {
        GeneratorJson {
            version: 1,
            d: self.d,
            segments: self
                .segments
                .iter()
                .map(|s| SegmentJson {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    h: MatrixJson::from_cmat(&s.hamiltonian),
                    lindblad: s
                        .channels
                        .iter()
                        .map(|(a, gamma)| LindbladTermJson {
                            a: MatrixJson::from_cmat(a),
                            gamma: *gamma,
                        })
                        .collect(),
                })
                .collect(),
        }
    }

    pub fn from_json(j: &GeneratorJson, tol: &TolerancePolicy) -> Result<Self> {
        if j.version != 1 {
            return Err(Error::Config(format!(
                "unsupported generator format version {}",
                j.version
            )));
        }
        let segments = j
            .segments
            .iter()
            .map(|s| {
                Ok(Segment {
                    t_start: s.t_start,
                    t_end: s.t_end,
                    hamiltonian: s.h.to_cmat()?,
                    channels: s
                        .lindblad
                        .iter()
                        .map(|term| Ok((term.a.to_cmat()?, term.gamma)))
                        .collect::<Result<Vec<_>>>()?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::new(j.d, segments, tol)
    }
}

fn matrix_power(m: &CMat, mut n: usize) -> CMat {
    let d = m.nrows();
    let mut result = CMat::identity(d, d);
    let mut base = m.clone();
    while n > 0 {
        if n & 1 == 1 {
            result = &base * &result;
        }
        n >>= 1;
        if n > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Propagator `E(t1, t0)` of the schedule: the time-ordered product of the
/// per-segment matrix exponentials over `[t0, t1]`. `steps_per_unit` splits
/// each covered stretch into substeps before exponentiating; for a constant
/// generator this cannot change the result (the exponentials commute), so it
/// exists to make refinement studies explicit, not to control accuracy.
pub fn propagate(
    g: &GkslGenerator,
    t0: f64,
    t1: f64,
    steps_per_unit: usize,
) -> Result<SuperOp> {
    let total = g.total_time();
    for t in [t0, t1] {
        if !(0.0..=total).contains(&t) {
            return Err(Error::TimeRange {
                t,
                t_min: 0.0,
                t_max: total,
            });
        }
    }
    if t1 < t0 {
        return Err(Error::TimeRange {
            t: t1,
            t_min: t0,
            t_max: total,
        });
    }
    let dd = g.d * g.d;
    let mut acc = CMat::identity(dd, dd);
    for (seg, transfer) in g.segments.iter().zip(&g.transfers) {
        let a = seg.t_start.max(t0);
        let b = seg.t_end.min(t1);
        if b <= a {
            continue;
        }
        let width = b - a;
        let n = ((width * steps_per_unit as f64).ceil() as usize).max(1);
        let step = (transfer * C64::new(width / n as f64, 0.0)).exp();
        acc = matrix_power(&step, n) * acc;
    }
    SuperOp::new(g.d, g.d, acc)
}

/// Hilbert–Schmidt-orthonormal traceless Hermitian basis of `d × d`
/// operators (`d² − 1` matrices): symmetric and antisymmetric off-diagonal
/// pairs followed by the diagonal ladder, generalizing the Pauli basis
/// `σ_x/√2, σ_y/√2, σ_z/√2`.
pub fn gell_mann_basis(d: usize) -> Vec<CMat> {
    let mut basis = Vec::with_capacity(d * d - 1);
    let inv_sqrt2 = std::f64::consts::FRAC_1_SQRT_2;
    for k in 1..d {
        for j in 0..k {
            let mut sym = CMat::zeros(d, d);
            sym[(j, k)] = C64::new(inv_sqrt2, 0.0);
            sym[(k, j)] = C64::new(inv_sqrt2, 0.0);
            basis.push(sym);
            let mut anti = CMat::zeros(d, d);
            anti[(j, k)] = C64::new(0.0, -inv_sqrt2);
            anti[(k, j)] = C64::new(0.0, inv_sqrt2);
            basis.push(anti);
        }
        // diag(1, …, 1, −k, 0, …) / √(k(k+1)) with k leading ones
        let norm = 1.0 / ((k * (k + 1)) as f64).sqrt();
        let mut diag = CMat::zeros(d, d);
        for j in 0..k {
            diag[(j, j)] = C64::new(norm, 0.0);
        }
        diag[(k, k)] = C64::new(-(k as f64) * norm, 0.0);
        basis.push(diag);
    }
    basis
}

/// A generator reduced to canonical form: Hermitian traceless Hamiltonian,
/// real rates sorted descending, and orthonormal traceless jump operators.
#[derive(Debug, Clone)]
pub struct CanonicalForm {
    pub hamiltonian: CMat,
    /// Eigenvalues of the Kossakowski matrix, descending. A negative entry
    /// certifies the generator is not in completely positive form.
    pub rates: Vec<f64>,
    /// Orthonormal traceless jump operators paired with `rates`.
    pub lindblad_ops: Vec<CMat>,
}

impl CanonicalForm {
    /// Rebuild the transfer matrix from the canonical data.
    pub fn reassemble(&self, tol: &TolerancePolicy) -> Result<SuperOp> {
        let d = self.hamiltonian.nrows();
        let channels: Vec<(CMat, f64)> = self
            .lindblad_ops
            .iter()
            .cloned()
            .zip(self.rates.iter().copied())
            .collect();
        let transfer = gksl_superop(&self.hamiltonian, &channels, tol)?;
        SuperOp::new(d, d, transfer)
    }
}

/// Rotate `m` by a global phase so its largest-modulus entry is real
/// positive (first such entry in column-major order on ties).
fn fix_phase(m: &mut CMat) {
    let mut best = C64::new(0.0, 0.0);
    let mut best_mod = 0.0;
    for v in m.iter() {
        let n = v.norm();
        if n > best_mod * (1.0 + 1e-15) {
            best_mod = n;
            best = *v;
        }
    }
    if best_mod > 0.0 {
        let phase = best / best_mod;
        *m *= phase.conj();
    }
}

/// Extract the canonical form of a generator: project onto the orthonormal
/// operator basis `{I/√d} ∪ {G_a}`, read the Hamiltonian off the mixed
/// block, and diagonalize the Kossakowski matrix for rates and jump
/// operators. Errors if the map is not Hermiticity-preserving or does not
/// annihilate the trace — the two structural properties every generator of
/// trace-preserving Hermitian dynamics must have.
pub fn canonical_form(op: &SuperOp, tol: &TolerancePolicy) -> Result<CanonicalForm> {
    if op.d_in() != op.d_out() {
        return Err(Error::Dimension {
            context: "canonical_form",
            expected: op.d_in(),
            actual: op.d_out(),
        });
    }
    let d = op.d_in();
    let t = op.transfer();

    // Hermiticity preservation <=> the reshuffled transfer is Hermitian
    let reshuffled = choi(op);
    let herm_dev = max_abs_diff(reshuffled.matrix(), &reshuffled.matrix().adjoint());
    if herm_dev > tol.herm_for(t) {
        return Err(Error::GeneratorForm {
            reason: format!("not Hermiticity-preserving (deviation {herm_dev:.3e})"),
        });
    }
    // trace annihilation <=> vec(I)† T = 0
    let id_vec = vec_col(&CMat::identity(d, d));
    let trace_residual = (t.adjoint() * &id_vec).norm();
    if trace_residual > tol.trace_for(t) {
        return Err(Error::GeneratorForm {
            reason: format!("does not annihilate the trace (residual {trace_residual:.3e})"),
        });
    }

    // orthonormal operator basis F_0 = I/√d, F_a = G_a
    let mut basis = vec![CMat::identity(d, d).unscale(((d) as f64).sqrt())];
    basis.extend(gell_mann_basis(d));
    let n = basis.len(); // = d²
    // expansion T = Σ_{αβ} c_{αβ} (conj(F_β) ⊗ F_α) over an orthonormal set
    let mut c = CMat::zeros(n, n);
    for alpha in 0..n {
        for beta in 0..n {
            let e = basis[beta].conjugate().kronecker(&basis[alpha]);
            c[(alpha, beta)] = hs_inner(&e, t);
        }
    }

    // Hamiltonian from the mixed block: B = (1/√d) Σ_a c_{a0} F_a,
    // H = (i/2)(B − B†)
    let mut b = CMat::zeros(d, d);
    for a in 1..n {
        b += &basis[a] * c[(a, 0)];
    }
    b.unscale_mut((d as f64).sqrt());
    let hamiltonian = (&b - b.adjoint()) * C64::new(0.0, 0.5);

    // Kossakowski block c_{ab}, a,b ≥ 1: Hermitian, diagonalized for rates
    let kossakowski = c.view((1, 1), (n - 1, n - 1)).into_owned();
    let (vals, vecs) = eig_hermitian(&kossakowski, tol).map_err(|e| Error::GeneratorForm {
        reason: format!("Kossakowski block is not Hermitian: {e}"),
    })?;
    let mut rates = Vec::with_capacity(n - 1);
    let mut lindblad_ops = Vec::with_capacity(n - 1);
    for k in (0..n - 1).rev() {
        rates.push(vals[k]);
        let mut op_k = CMat::zeros(d, d);
        for a in 0..n - 1 {
            op_k += &basis[a + 1] * vecs[(a, k)];
        }
        fix_phase(&mut op_k);
        lindblad_ops.push(op_k);
    }
    Ok(CanonicalForm {
        hamiltonian,
        rates,
        lindblad_ops,
    })
}

/// The two-time map `Φ(t2, t1)` of a schedule, computed along both available
/// routes.
#[derive(Debug, Clone)]
pub struct IntermediateMap {
    /// Time-ordered product of segment exponentials over `[t1, t2]`.
    pub direct: SuperOp,
    /// `E(0, t2) ∘ E(0, t1)⁻¹`.
    pub via_inverse: SuperOp,
    /// Max-entry difference between the two transfer matrices.
    pub route_discrepancy: f64,
    /// Smallest eigenvalue of the Choi matrix of the direct route,
    /// normalized to unit trace. Negative values witness a CP violation.
    pub min_choi_eigenvalue: f64,
}

/// Compute the intermediate map between two times of a schedule.
pub fn intermediate_map(
    g: &GkslGenerator,
    t1: f64,
    t2: f64,
    steps_per_unit: usize,
    tol: &TolerancePolicy,
) -> Result<IntermediateMap> {
    if t2 < t1 {
        return Err(Error::TimeRange {
            t: t2,
            t_min: t1,
            t_max: g.total_time(),
        });
    }
    let direct = propagate(g, t1, t2, steps_per_unit)?;
    let e01 = propagate(g, 0.0, t1, steps_per_unit)?;
    let e02 = propagate(g, 0.0, t2, steps_per_unit)?;
    let via_inverse = e02.compose(&e01.invert(tol)?)?;
    let route_discrepancy = max_abs_diff(direct.transfer(), via_inverse.transfer());
    let min_choi_eigenvalue =
        choi(&direct).min_eigenvalue(tol)? / g.d() as f64;
    Ok(IntermediateMap {
        direct,
        via_inverse,
        route_discrepancy,
        min_choi_eigenvalue,
    })
}

/// One scanned pair of times.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScanEntry {
    pub t1: f64,
    pub t2: f64,
    /// Smallest unit-trace-normalized Choi eigenvalue of `Φ(t2, t1)`.
    pub min_choi_eigenvalue: f64,
}

/// Result of scanning all ordered grid pairs for CP violations of the
/// intermediate maps.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DivisibilityScan {
    pub entries: Vec<ScanEntry>,
    /// Lexicographically first pair whose intermediate map fails complete
    /// positivity.
    pub first_violation: Option<(f64, f64)>,
    pub cp_divisible: bool,
    pub max_route_discrepancy: f64,
}

/// Evaluate the intermediate map on every strictly ordered pair of grid
/// times and report where complete positivity fails. A grid with fewer than
/// two points yields an empty, trivially divisible scan.
pub fn divisibility_scan(
    g: &GkslGenerator,
    grid: &[f64],
    steps_per_unit: usize,
    tol: &TolerancePolicy,
) -> Result<DivisibilityScan> {
    let total = g.total_time();
    for (k, &t) in grid.iter().enumerate() {
        if !(0.0..=total).contains(&t) {
            return Err(Error::TimeRange {
                t,
                t_min: 0.0,
                t_max: total,
            });
        }
        // negated form so NaN grid points are also rejected
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if k + 1 < grid.len() && !(grid[k + 1] > t) {
            return Err(Error::Config(format!(
                "scan grid must be strictly increasing, got {} then {}",
                t,
                grid[k + 1]
            )));
        }
    }
    let mut pairs = Vec::new();
    for k in 0..grid.len() {
        for l in k + 1..grid.len() {
            pairs.push((grid[k], grid[l]));
        }
    }
    let results: Vec<(ScanEntry, f64)> = pairs
        .par_iter()
        .map(|&(t1, t2)| {
            let im =
                intermediate_map(g, t1, t2, steps_per_unit, tol).map_err(|e| {
                    Error::ScanFailure {
                        t1,
                        t2,
                        source: Box::new(e),
                    }
                })?;
            Ok((
                ScanEntry {
                    t1,
                    t2,
                    min_choi_eigenvalue: im.min_choi_eigenvalue,
                },
                im.route_discrepancy,
            ))
        })
        .collect::<Result<Vec<_>>>()?;

    let threshold = -tol.psd_for(g.d() * g.d());
    let mut first_violation = None;
    let mut max_route_discrepancy: f64 = 0.0;
    let mut entries = Vec::with_capacity(results.len());
    for (entry, disc) in results {
        if first_violation.is_none() && entry.min_choi_eigenvalue < threshold {
            first_violation = Some((entry.t1, entry.t2));
        }
        max_route_discrepancy = max_route_discrepancy.max(disc);
        entries.push(entry);
    }
    Ok(DivisibilityScan {
        entries,
        cp_divisible: first_violation.is_none(),
        first_violation,
        max_route_discrepancy,
    })
}
