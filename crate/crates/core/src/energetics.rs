//! Bound energy, free energy and athermality of a state relative to its
//! own thermal boundary, plus their `beta`-bath counterparts.
//!
//! The primary route is the root solvers of [`GibbsFamily`]. The grid
//! minimisations ([`variational_free_energy`], [`variational_athermality`])
//! evaluate the same quantities by a different path and are meant for
//! cross-checking.

use crate::gibbs::{Beta, GibbsFamily};
use crate::operators::{self, DensityMatrix};
use crate::{Error, Result};

/// Free energies and athermalities below this magnitude are reported as
/// exactly zero.
pub const FREE_ENERGY_ZERO: f64 = 1e-12;

/// All single-state thermodynamic labels at once.
#[derive(Debug, Clone, PartialEq)]
pub struct EnergeticsReport {
    pub energy: f64,
    pub entropy: f64,
    pub bound_energy: f64,
    pub free_energy: f64,
    pub intrinsic_beta: Beta,
    pub athermality: f64,
    pub spontaneous_beta: Beta,
}

fn check_dim(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<()> {
    if rho.dim() != fam.dim() {
        return Err(Error::DimensionMismatch {
            expected: fam.dim(),
            found: rho.dim(),
        });
    }
    Ok(())
}

pub fn energy(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    operators::expectation(fam.hamiltonian(), rho)
}

/// Bound energy at a given entropy: the energy of the completely passive
/// state with that entropy (or `E_min` below `ln g0`).
pub fn bound_energy_at_entropy(fam: &GibbsFamily, entropy: f64) -> Result<(f64, Beta)> {
    let beta = fam.intrinsic_beta(entropy)?;
    let b = match beta {
        Beta::PosInf => fam.e_min(),
        _ => fam.boundary_energy(beta),
    };
    Ok((b, beta))
}

pub fn bound_energy(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    check_dim(rho, fam)?;
    Ok(bound_energy_at_entropy(fam, rho.entropy())?.0)
}

/// `E - B` without rounding to zero; the accounting identities use this.
pub fn raw_free_energy(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    Ok(energy(rho, fam)? - bound_energy(rho, fam)?)
}

fn snap(x: f64) -> f64 {
    if x.abs() < FREE_ENERGY_ZERO {
        0.0
    } else {
        x
    }
}

pub fn free_energy(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    Ok(snap(raw_free_energy(rho, fam)?))
}

/// Entropy the state could still absorb at fixed energy.
pub fn athermality(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    let e = energy(rho, fam)?;
    let beta = fam.spontaneous_beta(e)?;
    Ok(snap(fam.boundary_entropy(beta) - rho.entropy()))
}

pub fn report(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<EnergeticsReport> {
    check_dim(rho, fam)?;
    let energy = energy(rho, fam)?;
    let entropy = rho.entropy();
    let (bound_energy, intrinsic_beta) = bound_energy_at_entropy(fam, entropy)?;
    let free_energy = snap(energy - bound_energy);
    let spontaneous_beta = fam.spontaneous_beta(energy)?;
    let athermality = snap(fam.boundary_entropy(spontaneous_beta) - entropy);
    Ok(EnergeticsReport {
        energy,
        entropy,
        bound_energy,
        free_energy,
        intrinsic_beta,
        athermality,
        spontaneous_beta,
    })
}

/// `|F(rho) - T(rho) D(rho || gamma(rho))|` with the relative entropy taken
/// spectrally. A maximally mixed state (`T = inf`) must have `F = 0`.
pub fn relative_entropy_check(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<f64> {
    let f = free_energy(rho, fam)?;
    match fam.intrinsic_beta(rho.entropy())? {
        Beta::Finite(b) if b > 0.0 => {
            let gamma = fam.gibbs_state(Beta::Finite(b));
            let d = operators::relative_entropy(rho, &gamma)?;
            Ok((f - d / b).abs())
        }
        Beta::Finite(_) => Ok(f.abs()),
        _ => Err(Error::Unsupported(
            "relative-entropy form needs a finite intrinsic temperature".into(),
        )),
    }
}

/// `F_beta(rho) - F_beta(gamma(beta))` with `F_beta = E - S / beta`: the
/// work extractable with an ideal bath at inverse temperature `beta`.
pub fn beta_free_energy(rho: &DensityMatrix, fam: &GibbsFamily, beta: f64) -> Result<f64> {
    check_dim(rho, fam)?;
    if beta == 0.0 || !beta.is_finite() {
        return Err(Error::Unsupported(format!(
            "beta free energy needs a finite non-zero beta, got {beta}"
        )));
    }
    let e = energy(rho, fam)?;
    let p = fam.thermal_point(Beta::Finite(beta));
    Ok((e - p.energy) - (rho.entropy() - p.entropy) / beta)
}

/// `beta E(rho) - S(rho) + ln Z_beta`.
pub fn beta_athermality(rho: &DensityMatrix, fam: &GibbsFamily, beta: f64) -> Result<f64> {
    check_dim(rho, fam)?;
    if !beta.is_finite() {
        return Err(Error::Unsupported("beta-athermality needs a finite beta".into()));
    }
    Ok(beta * energy(rho, fam)? - rho.entropy() + fam.log_partition(beta))
}

/// Minimum of a function sampled on a grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridMinimum {
    pub value: f64,
    pub beta: f64,
    pub index: usize,
}

impl GridMinimum {
    /// Largest spacing between the argmin and its grid neighbours.
    pub fn step(&self, grid: &[f64]) -> f64 {
        let i = self.index;
        let left = if i > 0 { grid[i] - grid[i - 1] } else { 0.0 };
        let right = if i + 1 < grid.len() { grid[i + 1] - grid[i] } else { 0.0 };
        left.abs().max(right.abs())
    }
}

pub const GRID_POINTS: usize = 2001;

/// `n` log-spaced points on `[lo, hi]`, `0 < lo < hi`.
pub fn log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n)
        .map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp())
        .collect()
}

/// `-hi .. -lo, 0, lo .. hi`, log-spaced on each side, `n` points in total.
pub fn symmetric_log_grid(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let side = log_grid(lo, hi, (n - 1) / 2);
    let mut grid: Vec<f64> = side.iter().rev().map(|x| -x).collect();
    grid.push(0.0);
    grid.extend(side);
    grid
}

/// Log grid on `[beta/10, 10 beta]` (mirrored for negative `beta`),
/// ascending.
pub fn centered_grid(beta: f64, n: usize) -> Vec<f64> {
    let a = beta.abs();
    let g = log_grid(a / 10.0, a * 10.0, n);
    if beta >= 0.0 {
        g
    } else {
        g.iter().rev().map(|x| -x).collect()
    }
}

fn grid_min(grid: &[f64], mut f: impl FnMut(f64) -> Result<f64>) -> Result<GridMinimum> {
    let mut best = GridMinimum {
        value: f64::INFINITY,
        beta: f64::NAN,
        index: 0,
    };
    for (index, &beta) in grid.iter().enumerate() {
        let value = f(beta)?;
        if value < best.value {
            best = GridMinimum { value, beta, index };
        }
    }
    if best.beta.is_nan() {
        return Err(Error::Precondition("empty grid".into()));
    }
    Ok(best)
}

/// Default grid for [`variational_free_energy`].
pub fn free_energy_grid(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<Vec<f64>> {
    Ok(match fam.intrinsic_beta(rho.entropy())? {
        Beta::Finite(b) if b > 0.0 => centered_grid(b, GRID_POINTS),
        _ => log_grid(1e-3, 1e3, GRID_POINTS),
    })
}

/// Default grid for [`variational_athermality`].
pub fn athermality_grid(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<Vec<f64>> {
    Ok(match fam.spontaneous_beta(energy(rho, fam)?)? {
        Beta::Finite(b) if b != 0.0 => centered_grid(b, GRID_POINTS),
        _ => symmetric_log_grid(1e-3, 1e3, GRID_POINTS),
    })
}

/// `min_beta [F_beta(rho) - F_beta(gamma(beta))]` over positive grid points.
pub fn variational_free_energy(
    rho: &DensityMatrix,
    fam: &GibbsFamily,
    grid: Option<&[f64]>,
) -> Result<GridMinimum> {
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = free_energy_grid(rho, fam)?;
            &owned
        }
    };
    if grid.iter().any(|&b| b <= 0.0) {
        return Err(Error::Precondition("free-energy grid must be positive".into()));
    }
    grid_min(grid, |b| beta_free_energy(rho, fam, b))
}

/// `min_beta A_beta(rho)` over the grid.
pub fn variational_athermality(
    rho: &DensityMatrix,
    fam: &GibbsFamily,
    grid: Option<&[f64]>,
) -> Result<GridMinimum> {
    let owned;
    let grid = match grid {
        Some(g) => g,
        None => {
            owned = athermality_grid(rho, fam)?;
            &owned
        }
    };
    grid_min(grid, |b| beta_athermality(rho, fam, b))
}
