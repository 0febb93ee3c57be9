//! Random ensembles for test harnesses and Monte-Carlo sweeps.
//!
//! States are drawn from the Hilbert–Schmidt measure (normalised `G G^dagger`
//! for a square Ginibre matrix `G`), unitaries from the Haar measure (QR of
//! a Ginibre matrix with the phases of `R`'s diagonal absorbed into `Q`).
//! Sweeps seed one ChaCha stream per trial so results do not depend on how
//! trials are scheduled.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operators::{CMatrix, DensityMatrix, HermitianOperator};

/// Independent generator for trial `index` of a sweep seeded with `seed`.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn ginibre<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
    })
}

pub fn haar_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    let qr = g.qr();
    let mut q = qr.q();
    let r = qr.r();
    for j in 0..dim {
        let d = r[(j, j)];
        let phase = if d.norm() > 0.0 {
            d / d.norm()
        } else {
            Complex64::new(1.0, 0.0)
        };
        for i in 0..dim {
            q[(i, j)] *= phase;
        }
    }
    q
}

/// Hilbert–Schmidt random mixed state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, dim, rng);
    let m = &g * g.adjoint();
    let tr: f64 = (0..dim).map(|i| m[(i, i)].re).sum();
    DensityMatrix::new(m.unscale(tr)).expect("Ginibre product is a valid state")
}

/// Haar random pure state.
pub fn random_pure_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> DensityMatrix {
    let g = ginibre(dim, 1, rng);
    let psi: Vec<Complex64> = g.iter().copied().collect();
    DensityMatrix::pure(&psi).expect("non-zero vector")
}

/// Random Hermitian operator with spectrum shifted to start at zero and
/// rescaled to width `width`; eigenvectors Haar distributed.
pub fn random_hamiltonian<R: Rng + ?Sized>(dim: usize, width: f64, rng: &mut R) -> HermitianOperator {
    if dim == 1 {
        return HermitianOperator::from_diagonal(&[0.0]).expect("valid");
    }
    let mut levels: Vec<f64> = (0..dim).map(|_| rng.random::<f64>()).collect();
    levels.sort_by(f64::total_cmp);
    let (lo, hi) = (levels[0], levels[dim - 1]);
    let levels: Vec<f64> = levels
        .iter()
        .map(|x| width * (x - lo) / (hi - lo))
        .collect();
    let u = haar_unitary(dim, rng);
    let diag = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
        dim,
        levels.iter().map(|&x| Complex64::new(x, 0.0)),
    ));
    HermitianOperator::new(&u * diag * u.adjoint()).expect("conjugated diagonal is Hermitian")
}

/// Random diagonal Hamiltonian (levels uniform on `[0, width]`, lowest at 0).
pub fn random_diagonal_hamiltonian<R: Rng + ?Sized>(
    dim: usize,
    width: f64,
    rng: &mut R,
) -> HermitianOperator {
    let mut levels: Vec<f64> = (0..dim).map(|_| width * rng.random::<f64>()).collect();
    let lo = levels.iter().copied().fold(f64::INFINITY, f64::min);
    for x in &mut levels {
        *x -= lo;
    }
    HermitianOperator::from_diagonal(&levels).expect("finite levels")
}

/// Random probability vector, uniform on the simplex.
pub fn random_probabilities<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vec<f64> {
    let e: Vec<f64> = (0..dim)
        .map(|_| -(1.0 - rng.random::<f64>()).ln())
        .collect();
    let total: f64 = e.iter().sum();
    e.into_iter().map(|x| x / total).collect()
}

fn traceless_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMatrix {
    let g = ginibre(dim, dim, rng);
    let mut h = (&g + g.adjoint()).scale(0.5);
    let shift = h.trace() / Complex64::new(dim as f64, 0.0);
    for i in 0..dim {
        h[(i, i)] -= shift;
    }
    h
}

/// `rho_a (x) rho_b + eps C` with `C` a random sum of products of traceless
/// Hermitian operators, so both marginals are exactly `rho_a` and `rho_b`.
/// `strength` in `(0, 1)` sets `eps` as that fraction of the largest value
/// keeping the state positive.
pub fn correlated_state<R: Rng + ?Sized>(
    rho_a: &DensityMatrix,
    rho_b: &DensityMatrix,
    strength: f64,
    rng: &mut R,
) -> DensityMatrix {
    let (da, db) = (rho_a.dim(), rho_b.dim());
    let mut c = CMatrix::zeros(da * db, da * db);
    for _ in 0..3 {
        c += traceless_hermitian(da, rng).kronecker(&traceless_hermitian(db, rng));
    }
    let product = rho_a.matrix().kronecker(rho_b.matrix());
    let floor = rho_a.spectrum()[da - 1] * rho_b.spectrum()[db - 1];
    let eps = strength.clamp(0.0, 1.0) * floor / c.norm();
    DensityMatrix::new(product + c.scale(eps)).expect("perturbation is within the positive cone")
}
