//! Seeded random sampling of matrices, unitaries and density operators.
//!
//! All sampling takes an explicit generator — there is no global RNG — so
//! every caller that holds a seed reproduces its draws exactly. Haar-random
//! unitaries come from the QR decomposition of a complex Ginibre matrix with
//! the R-diagonal phases normalized, which makes the distribution invariant
//! under left and right unitary multiplication.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::linalg::types::{DensityMatrix, UnitaryMatrix};
use crate::tolerance::TolerancePolicy;
use crate::{C64, CMat, CVec};

/// Complex Ginibre matrix: i.i.d. entries `(g₁ + i g₂)/√2` with `g ~ N(0,1)`.
pub fn ginibre<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    let norm = std::f64::consts::FRAC_1_SQRT_2;
    CMat::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        C64::new(re * norm, im * norm)
    })
}

/// Random Hermitian matrix `(G + G†)/2` from a Ginibre draw.
pub fn random_hermitian<R: Rng>(d: usize, rng: &mut R) -> CMat {
    let g = ginibre(d, d, rng);
    (&g + g.adjoint()).scale(0.5)
}

/// Haar-random unitary of dimension `d`.
pub fn random_unitary<R: Rng>(d: usize, rng: &mut R) -> UnitaryMatrix {
    let g = ginibre(d, d, rng);
    let (q, r) = g.qr().unpack();
    // normalize the phases of R's diagonal so the distribution is exactly Haar
    let mut u = q;
    for k in 0..d {
        let rkk = r[(k, k)];
        let phase = if rkk.norm() > 0.0 {
            rkk / rkk.norm()
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = u.column_mut(k);
        col *= phase;
    }
    UnitaryMatrix::new_unchecked(u)
}

/// Random density matrix of dimension `d` and rank at most `rank`:
/// `ρ = GG†/Tr(GG†)` with `G` a `d × rank` Ginibre matrix.
pub fn random_density<R: Rng>(d: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    assert!(rank >= 1 && rank <= d, "random_density: rank must be in 1..=d");
    let g = ginibre(d, rank, rng);
    let mut rho = &g * g.adjoint();
    let tr = rho.trace().re;
    rho.unscale_mut(tr);
    DensityMatrix::new(rho, &TolerancePolicy::default())
        .expect("Gram construction yields a valid density matrix")
}

/// Haar-random pure state: a normalized Gaussian vector.
pub fn random_pure_state<R: Rng>(d: usize, rng: &mut R) -> CVec {
    let g = ginibre(d, 1, rng);
    let mut v = CVec::from_column_slice(g.as_slice());
    let n = v.norm();
    v.unscale_mut(n);
    v
}
