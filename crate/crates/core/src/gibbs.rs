//! Gibbs families: thermal states of a fixed Hamiltonian at every inverse
//! temperature, the thermal boundary `(E(beta), S(beta))`, and the two
//! inversions used throughout the crate.
//!
//! * [`GibbsFamily::intrinsic_beta`] finds the thermal state with a given
//!   entropy (minimum-energy principle, `beta >= 0`).
//! * [`GibbsFamily::spontaneous_beta`] finds the thermal state with a given
//!   energy (maximum-entropy principle, `beta` of either sign).
//!
//! All arithmetic is done on level offsets from the ground (or top) energy,
//! so `|beta| * ||H||` of several hundred is harmless and entropies close to
//! `ln g0` keep their relative precision.

use std::fmt;

use crate::operators::{DensityMatrix, HermitianOperator};
use crate::roots::{self, Tolerance};
use crate::{Error, Result};

/// Inverse temperature, including the two zero-temperature limits.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Beta {
    Finite(f64),
    /// `beta -> +inf`: uniform mixture on the ground eigenspace.
    PosInf,
    /// `beta -> -inf`: uniform mixture on the top eigenspace.
    NegInf,
}

impl Beta {
    pub fn from_f64(x: f64) -> Beta {
        if x == f64::INFINITY {
            Beta::PosInf
        } else if x == f64::NEG_INFINITY {
            Beta::NegInf
        } else {
            Beta::Finite(x)
        }
    }

    pub fn value(self) -> f64 {
        match self {
            Beta::Finite(b) => b,
            Beta::PosInf => f64::INFINITY,
            Beta::NegInf => f64::NEG_INFINITY,
        }
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Beta::Finite(b) => Some(b),
            _ => None,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Beta::Finite(_))
    }

    /// `1/beta`; `beta = 0` maps to `+inf`, the sentinels to zero.
    pub fn temperature(self) -> f64 {
        match self {
            Beta::Finite(0.0) => f64::INFINITY,
            Beta::Finite(b) => 1.0 / b,
            Beta::PosInf => 0.0,
            Beta::NegInf => -0.0,
        }
    }
}

impl fmt::Display for Beta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Beta::Finite(b) => write!(f, "{b}"),
            Beta::PosInf => f.write_str("inf"),
            Beta::NegInf => f.write_str("-inf"),
        }
    }
}

/// Energy and entropy of a thermal state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalPoint {
    pub energy: f64,
    pub entropy: f64,
}

#[derive(Debug, Clone)]
pub struct GibbsFamily {
    hamiltonian: HermitianOperator,
    // offsets above the ground level / below the top level, ascending order,
    // snapped to exactly zero inside the degenerate extremal subspaces
    up: Vec<f64>,
    down: Vec<f64>,
    e_min: f64,
    e_max: f64,
    ground_degeneracy: usize,
    top_degeneracy: usize,
}

struct Weights {
    probs: Vec<f64>,
    // ln of the shifted partition sum
    log_sum: f64,
    // mean offset from the reference level
    mean_offset: f64,
}

impl GibbsFamily {
    pub fn new(hamiltonian: HermitianOperator) -> Self {
        let levels = hamiltonian.eigenvalues();
        let e_min = levels[0];
        let e_max = levels[levels.len() - 1];
        let tol = 1e-10 * (e_max - e_min).max(1.0);
        let up: Vec<f64> = levels
            .iter()
            .map(|&e| if e - e_min <= tol { 0.0 } else { e - e_min })
            .collect();
        let down: Vec<f64> = levels
            .iter()
            .map(|&e| if e_max - e <= tol { 0.0 } else { e_max - e })
            .collect();
        let ground_degeneracy = up.iter().filter(|&&u| u == 0.0).count();
        let top_degeneracy = down.iter().filter(|&&v| v == 0.0).count();
        GibbsFamily {
            hamiltonian,
            up,
            down,
            e_min,
            e_max,
            ground_degeneracy,
            top_degeneracy,
        }
    }

    pub fn from_diagonal(levels: &[f64]) -> Result<Self> {
        Ok(Self::new(HermitianOperator::from_diagonal(levels)?))
    }

    pub fn hamiltonian(&self) -> &HermitianOperator {
        &self.hamiltonian
    }

    pub fn dim(&self) -> usize {
        self.up.len()
    }

    /// Ascending energy levels.
    pub fn levels(&self) -> &[f64] {
        self.hamiltonian.eigenvalues()
    }

    pub fn e_min(&self) -> f64 {
        self.e_min
    }

    pub fn e_max(&self) -> f64 {
        self.e_max
    }

    pub fn width(&self) -> f64 {
        self.e_max - self.e_min
    }

    pub fn ground_degeneracy(&self) -> usize {
        self.ground_degeneracy
    }

    pub fn top_degeneracy(&self) -> usize {
        self.top_degeneracy
    }

    pub fn max_entropy(&self) -> f64 {
        (self.dim() as f64).ln()
    }

    /// Entropy reached in the `beta -> +inf` limit.
    pub fn ground_entropy(&self) -> f64 {
        (self.ground_degeneracy as f64).ln()
    }

    fn weights(&self, beta: f64) -> Weights {
        let (offsets, rate) = if beta >= 0.0 {
            (&self.up, beta)
        } else {
            (&self.down, -beta)
        };
        let mut raw: Vec<f64> = offsets.iter().map(|&u| (-rate * u).exp()).collect();
        let base = offsets.iter().filter(|&&u| u == 0.0).count() as f64;
        let rest: f64 = offsets
            .iter()
            .zip(&raw)
            .filter(|(&u, _)| u != 0.0)
            .map(|(_, &w)| w)
            .sum();
        let total = base + rest;
        let log_sum = base.ln() + (rest / base).ln_1p();
        let mut mean_offset = 0.0;
        for (w, &u) in raw.iter_mut().zip(offsets) {
            *w /= total;
            mean_offset += *w * u;
        }
        Weights {
            probs: raw,
            log_sum,
            mean_offset,
        }
    }

    /// Thermal populations in the ascending energy eigenbasis.
    pub fn populations(&self, beta: Beta) -> Vec<f64> {
        match beta {
            Beta::Finite(b) => self.weights(b).probs,
            Beta::PosInf => Self::uniform_on(&self.up),
            Beta::NegInf => Self::uniform_on(&self.down),
        }
    }

    fn uniform_on(offsets: &[f64]) -> Vec<f64> {
        let g = offsets.iter().filter(|&&u| u == 0.0).count() as f64;
        offsets
            .iter()
            .map(|&u| if u == 0.0 { 1.0 / g } else { 0.0 })
            .collect()
    }

    /// `exp(-beta H) / Z`.
    pub fn gibbs_state(&self, beta: Beta) -> DensityMatrix {
        DensityMatrix::from_eigen(self.populations(beta), self.hamiltonian.eigenvectors().clone())
    }

    /// `ln Tr exp(-beta H)`.
    pub fn log_partition(&self, beta: f64) -> f64 {
        let w = self.weights(beta);
        let reference = if beta >= 0.0 { self.e_min } else { self.e_max };
        w.log_sum - beta * reference
    }

    pub fn thermal_point(&self, beta: Beta) -> ThermalPoint {
        match beta {
            Beta::Finite(b) => {
                let w = self.weights(b);
                let (energy, entropy) = if b >= 0.0 {
                    (self.e_min + w.mean_offset, w.log_sum + b * w.mean_offset)
                } else {
                    (self.e_max - w.mean_offset, w.log_sum - b * w.mean_offset)
                };
                ThermalPoint { energy, entropy }
            }
            Beta::PosInf => ThermalPoint {
                energy: self.subspace_mean(&self.up),
                entropy: (self.ground_degeneracy as f64).ln(),
            },
            Beta::NegInf => ThermalPoint {
                energy: self.subspace_mean(&self.down),
                entropy: (self.top_degeneracy as f64).ln(),
            },
        }
    }

    fn subspace_mean(&self, offsets: &[f64]) -> f64 {
        let (sum, n) = offsets
            .iter()
            .zip(self.levels())
            .filter(|(&u, _)| u == 0.0)
            .fold((0.0, 0usize), |(s, n), (_, &e)| (s + e, n + 1));
        sum / n as f64
    }

    pub fn boundary_entropy(&self, beta: Beta) -> f64 {
        self.thermal_point(beta).entropy
    }

    pub fn boundary_energy(&self, beta: Beta) -> f64 {
        self.thermal_point(beta).energy
    }

    /// Energy variance of the thermal state, `-dE/dbeta`.
    pub fn energy_variance(&self, beta: f64) -> f64 {
        let w = self.weights(beta);
        let offsets = if beta >= 0.0 { &self.up } else { &self.down };
        w.probs
            .iter()
            .zip(offsets)
            .map(|(&p, &u)| p * (u - w.mean_offset).powi(2))
            .sum()
    }

    fn beta_scale(&self) -> f64 {
        let w = self.width();
        if w > 0.0 {
            1.0 / w
        } else {
            1.0
        }
    }

    /// The non-negative `beta` whose thermal state has entropy
    /// `target_entropy`. Entropies at or below `ln g0` map to `+inf`.
    pub fn intrinsic_beta(&self, target_entropy: f64) -> Result<Beta> {
        let s_max = self.max_entropy();
        if !(-1e-12..=s_max + 1e-12).contains(&target_entropy) {
            return Err(Error::OutOfRange {
                quantity: "entropy",
                value: target_entropy,
                lo: 0.0,
                hi: s_max,
            });
        }
        if target_entropy >= s_max {
            return Ok(Beta::Finite(0.0));
        }
        if target_entropy <= self.ground_entropy() {
            return Ok(Beta::PosInf);
        }
        let entropy = |b: f64| self.thermal_point(Beta::Finite(b)).entropy;
        let hi = roots::expand_until(|b| entropy(b) < target_entropy, self.beta_scale(), 1.0, 1e300)?;
        let lo = if hi > self.beta_scale() { hi / 2.0 } else { 0.0 };
        let b = roots::brent(|b| entropy(b) - target_entropy, lo, hi, Tolerance::default())?;
        Ok(Beta::Finite(b))
    }

    /// The `beta` (either sign) whose thermal state has energy
    /// `target_energy`; the spectral extremes map to the sentinels.
    pub fn spontaneous_beta(&self, target_energy: f64) -> Result<Beta> {
        let width = self.width();
        let slack = 1e-12 * width.max(1.0);
        if !(self.e_min - slack..=self.e_max + slack).contains(&target_energy) {
            return Err(Error::OutOfRange {
                quantity: "energy",
                value: target_energy,
                lo: self.e_min,
                hi: self.e_max,
            });
        }
        if width == 0.0 {
            return Ok(Beta::Finite(0.0));
        }
        let energy = |b: f64| self.thermal_point(Beta::Finite(b)).energy;
        let mean = energy(0.0);
        if target_energy == mean {
            return Ok(Beta::Finite(0.0));
        }
        if target_energy <= self.boundary_energy(Beta::PosInf) {
            return Ok(Beta::PosInf);
        }
        if target_energy >= self.boundary_energy(Beta::NegInf) {
            return Ok(Beta::NegInf);
        }
        let sign = if target_energy < mean { 1.0 } else { -1.0 };
        let far = roots::expand_until(
            |b| sign * (energy(b) - target_energy) < 0.0,
            self.beta_scale(),
            sign,
            1e300,
        )?;
        let near = if far.abs() > self.beta_scale() { far / 2.0 } else { 0.0 };
        let (lo, hi) = if sign > 0.0 { (near, far) } else { (far, near) };
        let b = roots::brent(|b| energy(b) - target_energy, lo, hi, Tolerance::default())?;
        Ok(Beta::Finite(b))
    }
}
