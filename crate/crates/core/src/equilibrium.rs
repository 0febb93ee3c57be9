//! Mutual equilibrium of non-interacting bodies.
//!
//! Two equilibration rules are provided. The iso-entropic one keeps the
//! total entropy and drops to the lowest energy; the iso-energetic one keeps
//! the total energy and climbs to the highest entropy. Both end in a product
//! of local Gibbs states at one common `beta`, because the Gibbs state of a
//! Kronecker-sum Hamiltonian factorises.

use crate::energetics;
use crate::gibbs::{Beta, GibbsFamily};
use crate::operators::{self, DensityMatrix, HermitianOperator, SubsystemSplit};
use crate::roots::{self, Tolerance};
use crate::{Error, Result};

/// Threshold on the joint free energy below which a state counts as an
/// equilibrium.
pub const EQUILIBRIUM_TOL: f64 = 1e-8;

/// Several non-interacting bodies, each possibly present in `copies`
/// identical independent copies. Only the additive boundary functions are
/// needed, so large copy numbers cost nothing.
#[derive(Debug, Clone)]
pub struct Composite<'a> {
    parts: Vec<(&'a GibbsFamily, f64)>,
}

impl<'a> Composite<'a> {
    pub fn new(parts: Vec<(&'a GibbsFamily, usize)>) -> Self {
        Composite {
            parts: parts.into_iter().map(|(f, n)| (f, n as f64)).collect(),
        }
    }

    pub fn single_copies(fams: &[&'a GibbsFamily]) -> Self {
        Composite::new(fams.iter().map(|&f| (f, 1)).collect())
    }

    fn sum(&self, f: impl Fn(&GibbsFamily) -> f64) -> f64 {
        self.parts.iter().map(|&(fam, n)| n * f(fam)).sum()
    }

    pub fn entropy(&self, beta: Beta) -> f64 {
        self.sum(|f| f.boundary_entropy(beta))
    }

    pub fn energy(&self, beta: Beta) -> f64 {
        self.sum(|f| f.boundary_energy(beta))
    }

    pub fn max_entropy(&self) -> f64 {
        self.sum(|f| f.max_entropy())
    }

    pub fn ground_entropy(&self) -> f64 {
        self.sum(|f| f.ground_entropy())
    }

    fn beta_scale(&self) -> f64 {
        let w = self.parts.iter().map(|(f, _)| f.width()).fold(0.0, f64::max);
        if w > 0.0 {
            1.0 / w
        } else {
            1.0
        }
    }

    /// Common `beta >= 0` at which the product of Gibbs states carries total
    /// entropy `s`. The flag is set when `s` lies below the ground-space
    /// entropy, where no Gibbs product matches and `+inf` is returned.
    pub fn beta_for_entropy(&self, s: f64) -> Result<(Beta, bool)> {
        let s_max = self.max_entropy();
        if !(-1e-12..=s_max + 1e-12).contains(&s) {
            return Err(Error::OutOfRange {
                quantity: "total entropy",
                value: s,
                lo: 0.0,
                hi: s_max,
            });
        }
        if s >= s_max {
            return Ok((Beta::Finite(0.0), false));
        }
        let s0 = self.ground_entropy();
        if s <= s0 {
            return Ok((Beta::PosInf, s < s0 - 1e-12));
        }
        let f = |b: f64| self.entropy(Beta::Finite(b));
        let scale = self.beta_scale();
        let hi = roots::expand_until(|b| f(b) < s, scale, 1.0, 1e300)?;
        let lo = if hi > scale { hi / 2.0 } else { 0.0 };
        let b = roots::brent(|b| f(b) - s, lo, hi, Tolerance::default())?;
        Ok((Beta::Finite(b), false))
    }

    /// Common `beta` (either sign) at which the Gibbs product has total
    /// energy `e`.
    pub fn beta_for_energy(&self, e: f64) -> Result<Beta> {
        let lo_e = self.energy(Beta::PosInf);
        let hi_e = self.energy(Beta::NegInf);
        let slack = 1e-12 * (hi_e - lo_e).max(1.0);
        if !(lo_e - slack..=hi_e + slack).contains(&e) {
            return Err(Error::OutOfRange {
                quantity: "total energy",
                value: e,
                lo: lo_e,
                hi: hi_e,
            });
        }
        let f = |b: f64| self.energy(Beta::Finite(b));
        let mean = f(0.0);
        if e == mean || hi_e == lo_e {
            return Ok(Beta::Finite(0.0));
        }
        if e <= lo_e {
            return Ok(Beta::PosInf);
        }
        if e >= hi_e {
            return Ok(Beta::NegInf);
        }
        let sign = if e < mean { 1.0 } else { -1.0 };
        let scale = self.beta_scale();
        let far = roots::expand_until(|b| sign * (f(b) - e) < 0.0, scale, sign, 1e300)?;
        let near = if far.abs() > scale { far / 2.0 } else { 0.0 };
        let (a, b) = if sign > 0.0 { (near, far) } else { (far, near) };
        Ok(Beta::Finite(roots::brent(|b| f(b) - e, a, b, Tolerance::default())?))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    IsoEntropic,
    IsoEnergetic,
}

#[derive(Debug, Clone)]
pub struct EquilibrationOutcome {
    pub mode: Mode,
    pub beta_joint: Beta,
    /// Product of the local Gibbs states at `beta_joint`.
    pub final_state: DensityMatrix,
    pub final_locals: Vec<DensityMatrix>,
    pub initial_energy: f64,
    pub final_energy: f64,
    pub initial_entropy: f64,
    pub final_entropy: f64,
    /// `E_initial - E_final`.
    pub work_released: f64,
    /// `S_final - S_initial`.
    pub entropy_produced: f64,
    /// No Gibbs product matches the conserved quantity (entropy below the
    /// joint ground-space entropy).
    pub degenerate: bool,
}

fn finish(
    mode: Mode,
    fams: &[&GibbsFamily],
    beta: Beta,
    initial_energy: f64,
    initial_entropy: f64,
    degenerate: bool,
) -> Result<EquilibrationOutcome> {
    let final_locals: Vec<DensityMatrix> = fams.iter().map(|f| f.gibbs_state(beta)).collect();
    let composite = Composite::single_copies(fams);
    let final_energy = composite.energy(beta);
    let final_entropy = composite.entropy(beta);
    Ok(EquilibrationOutcome {
        mode,
        beta_joint: beta,
        final_state: operators::tensor_all(&final_locals)?,
        final_locals,
        initial_energy,
        final_energy,
        initial_entropy,
        final_entropy,
        work_released: initial_energy - final_energy,
        entropy_produced: final_entropy - initial_entropy,
        degenerate,
    })
}

fn local_totals(locals: &[(&DensityMatrix, &GibbsFamily)]) -> Result<(f64, f64)> {
    if locals.len() < 2 {
        return Err(Error::Precondition("equilibration needs at least two bodies".into()));
    }
    let mut e = 0.0;
    let mut s = 0.0;
    for (rho, fam) in locals {
        e += energetics::energy(rho, fam)?;
        s += rho.entropy();
    }
    Ok((e, s))
}

/// Minimum-energy state among products of Gibbs states with the same total
/// entropy as the uncorrelated inputs.
pub fn equilibrate_isoentropic(
    locals: &[(&DensityMatrix, &GibbsFamily)],
) -> Result<EquilibrationOutcome> {
    let (e, s) = local_totals(locals)?;
    let fams: Vec<&GibbsFamily> = locals.iter().map(|l| l.1).collect();
    let (beta, degenerate) = Composite::single_copies(&fams).beta_for_entropy(s)?;
    finish(Mode::IsoEntropic, &fams, beta, e, s, degenerate)
}

/// Maximum-entropy state with the same total energy as the inputs.
pub fn equilibrate_isoenergetic(
    locals: &[(&DensityMatrix, &GibbsFamily)],
) -> Result<EquilibrationOutcome> {
    let (e, s) = local_totals(locals)?;
    let fams: Vec<&GibbsFamily> = locals.iter().map(|l| l.1).collect();
    let beta = Composite::single_copies(&fams).beta_for_energy(e)?;
    finish(Mode::IsoEnergetic, &fams, beta, e, s, false)
}

fn joint_energy(rho: &DensityMatrix, fams: &[&GibbsFamily], split: &SubsystemSplit) -> Result<f64> {
    let h = joint_hamiltonian(fams, split)?;
    operators::expectation(&h, rho)
}

/// Iso-entropic equilibration of a possibly correlated joint state; the
/// conserved entropy is that of the joint state.
pub fn equilibrate_isoentropic_joint(
    rho: &DensityMatrix,
    fams: &[&GibbsFamily],
    split: &SubsystemSplit,
) -> Result<EquilibrationOutcome> {
    let e = joint_energy(rho, fams, split)?;
    let s = rho.entropy();
    let (beta, degenerate) = Composite::single_copies(fams).beta_for_entropy(s)?;
    finish(Mode::IsoEntropic, fams, beta, e, s, degenerate)
}

/// Kronecker sum of the local Hamiltonians, checked against `split`.
pub fn joint_hamiltonian(fams: &[&GibbsFamily], split: &SubsystemSplit) -> Result<HermitianOperator> {
    if fams.len() != split.parts() {
        return Err(Error::DimensionMismatch {
            expected: split.parts(),
            found: fams.len(),
        });
    }
    for (f, &d) in fams.iter().zip(split.dims()) {
        if f.dim() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                found: f.dim(),
            });
        }
    }
    let mut h = fams[0].hamiltonian().clone();
    for f in &fams[1..] {
        h = h.kron_sum(f.hamiltonian());
    }
    Ok(h)
}

pub fn joint_family(fams: &[&GibbsFamily], split: &SubsystemSplit) -> Result<GibbsFamily> {
    Ok(GibbsFamily::new(joint_hamiltonian(fams, split)?))
}

/// Whether the bodies jointly sit at zero free energy. Returns the flag and
/// the joint free energy.
pub fn is_equilibrium(
    rho: &DensityMatrix,
    fams: &[&GibbsFamily],
    split: &SubsystemSplit,
) -> Result<(bool, f64)> {
    split.check(rho.dim())?;
    let joint = joint_family(fams, split)?;
    let f = energetics::free_energy(rho, &joint)?;
    Ok((f <= EQUILIBRIUM_TOL, f))
}

/// The common temperature lies between the two initial ones.
pub fn ordering_check(beta_a: f64, beta_b: f64, outcome: &EquilibrationOutcome) -> bool {
    let b = outcome.beta_joint.value();
    beta_a.min(beta_b) - 1e-9 <= b && b <= beta_a.max(beta_b) + 1e-9
}
