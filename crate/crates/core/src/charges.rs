//! Several commuting conserved charges `L_0 = H, L_1, ..., L_{q-1}`.
//!
//! Completely passive states become generalised Gibbs ensembles
//! `exp(-sum_k beta_k L_k) / Z`. Everything is computed in a common
//! eigenbasis of the charges, where a GGE is a probability vector over the
//! joint eigenvalue tuples.
//!
//! The workhorse is the convex dual `f(beta) = beta . l + ln Z(beta)`:
//! its gradient is `l - <L>_beta` and its Hessian the covariance matrix of
//! the charges, so Newton's method finds the GGE with prescribed charges
//! and `min_beta f` is the largest entropy compatible with them.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::energetics;
use crate::gibbs::GibbsFamily;
use crate::operators::{self, CMatrix, DensityMatrix, HermitianOperator, SubsystemSplit};
use crate::random::haar_unitary;
use crate::roots::{self, Tolerance};
use crate::{Error, Result};

/// Largest tolerated entry of a commutator `[L_j, L_k]`, relative to the
/// product of the operators' largest entries.
pub const COMMUTATOR_TOL: f64 = 1e-10;
/// Newton stops once every charge matches its target to this accuracy.
pub const SOLVE_TOL: f64 = 1e-9;
pub const MAX_RESTARTS: usize = 32;

const MAX_NEWTON: usize = 200;
const DIVERGED: f64 = 1e8;

// weights for the generic combination whose eigenbasis diagonalises all
// charges at once
const MIX: [f64; 6] = [
    1.0,
    0.414_213_562_373_095_1,
    0.141_592_653_589_793_2,
    0.718_281_828_459_045,
    0.302_775_637_731_994_6,
    0.236_067_977_499_789_7,
];

fn max_entry(m: &CMatrix) -> f64 {
    m.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// Commuting charges with a cached common eigenbasis.
#[derive(Debug, Clone)]
pub struct ChargeSet {
    charges: Vec<HermitianOperator>,
    basis: CMatrix,
    // values[i][k] = <v_i| L_k |v_i>
    values: Vec<Vec<f64>>,
}

impl ChargeSet {
    pub fn new(charges: Vec<HermitianOperator>) -> Result<Self> {
        let first = charges.first().ok_or(Error::Empty)?;
        let d = first.dim();
        for c in &charges {
            if c.dim() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: c.dim(),
                });
            }
        }
        for (j, a) in charges.iter().enumerate() {
            for b in &charges[j + 1..] {
                let comm = a.commutator_norm(b)?;
                let scale = (max_entry(a.matrix()) * max_entry(b.matrix())).max(1.0);
                if comm > COMMUTATOR_TOL * scale {
                    return Err(Error::NonCommuting(comm));
                }
            }
        }
        let q = charges.len();
        let mut best: Option<(f64, CMatrix)> = None;
        for shift in 0..MIX.len() {
            let coeffs: Vec<f64> = (0..q)
                .map(|k| {
                    let norm = max_entry(charges[k].matrix()).max(1e-300);
                    MIX[(k + shift) % MIX.len()] * (1.0 + k as f64).sqrt() / norm
                })
                .collect();
            let combo = HermitianOperator::linear_combination(&charges, &coeffs)?;
            let basis = combo.eigenvectors().clone();
            let leak = charges
                .iter()
                .map(|c| {
                    let r = basis.adjoint() * c.matrix() * &basis;
                    let mut off: f64 = 0.0;
                    for i in 0..d {
                        for j in 0..d {
                            if i != j {
                                off = off.max(r[(i, j)].norm());
                            }
                        }
                    }
                    off / max_entry(c.matrix()).max(1.0)
                })
                .fold(0.0, f64::max);
            if best.as_ref().is_none_or(|b| leak < b.0) {
                best = Some((leak, basis));
            }
            if leak <= 1e-9 {
                break;
            }
        }
        let (leak, basis) = best.expect("at least one attempt");
        if leak > 1e-8 {
            return Err(Error::NonCommuting(leak));
        }
        let values = (0..d)
            .map(|i| {
                let v = basis.column(i);
                charges
                    .iter()
                    .map(|c| (v.adjoint() * c.matrix() * v)[(0, 0)].re)
                    .collect()
            })
            .collect();
        Ok(ChargeSet {
            charges,
            basis,
            values,
        })
    }

    pub fn q(&self) -> usize {
        self.charges.len()
    }

    pub fn dim(&self) -> usize {
        self.basis.nrows()
    }

    pub fn charges(&self) -> &[HermitianOperator] {
        &self.charges
    }

    /// Common eigenvectors as columns.
    pub fn basis(&self) -> &CMatrix {
        &self.basis
    }

    /// Joint eigenvalue tuple of each common eigenvector.
    pub fn joint_values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `L_k (x) 1 + 1 (x) M_k` for every charge.
    pub fn kron_sum(&self, other: &ChargeSet) -> Result<ChargeSet> {
        if self.q() != other.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                found: other.q(),
            });
        }
        ChargeSet::new(
            self.charges
                .iter()
                .zip(&other.charges)
                .map(|(a, b)| a.kron_sum(b))
                .collect(),
        )
    }
}

/// A point `(L_0, ..., L_{q-1}, S)` of the charges-entropy diagram.
#[derive(Debug, Clone, PartialEq)]
pub struct ChargesPoint {
    pub charges: Vec<f64>,
    pub entropy: f64,
}

/// Moments of a GGE.
#[derive(Debug, Clone)]
pub struct GgeStats {
    pub probs: Vec<f64>,
    pub log_partition: f64,
    pub means: Vec<f64>,
    pub covariance: DMatrix<f64>,
}

impl GgeStats {
    pub fn entropy(&self) -> f64 {
        operators::shannon(&self.probs)
    }
}

#[derive(Debug, Clone)]
pub struct GgeFamily {
    set: ChargeSet,
}

enum Dual {
    Converged { beta: Vec<f64>, value: f64 },
    /// An iterate pushed the dual below the supplied floor.
    Below,
    Failed(Error),
}

impl GgeFamily {
    pub fn new(set: ChargeSet) -> Self {
        GgeFamily { set }
    }

    pub fn from_charges(charges: Vec<HermitianOperator>) -> Result<Self> {
        Ok(GgeFamily::new(ChargeSet::new(charges)?))
    }

    pub fn charge_set(&self) -> &ChargeSet {
        &self.set
    }

    pub fn q(&self) -> usize {
        self.set.q()
    }

    pub fn dim(&self) -> usize {
        self.set.dim()
    }

    fn check_beta(&self, beta: &[f64]) -> Result<()> {
        if beta.len() != self.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                found: beta.len(),
            });
        }
        if beta.iter().any(|b| !b.is_finite()) {
            return Err(Error::Unsupported("GGE needs a finite beta vector".into()));
        }
        Ok(())
    }

    fn exponents(&self, beta: &[f64]) -> Vec<f64> {
        self.set
            .values
            .iter()
            .map(|l| -l.iter().zip(beta).map(|(x, b)| x * b).sum::<f64>())
            .collect()
    }

    pub fn log_partition(&self, beta: &[f64]) -> f64 {
        let x = self.exponents(beta);
        let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        top + x.iter().map(|v| (v - top).exp()).sum::<f64>().ln()
    }

    pub fn stats(&self, beta: &[f64]) -> GgeStats {
        let q = self.q();
        let x = self.exponents(beta);
        let top = x.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let w: Vec<f64> = x.iter().map(|v| (v - top).exp()).collect();
        let sum: f64 = w.iter().sum();
        let probs: Vec<f64> = w.iter().map(|v| v / sum).collect();
        let mut means = vec![0.0; q];
        for (p, l) in probs.iter().zip(&self.set.values) {
            for k in 0..q {
                means[k] += p * l[k];
            }
        }
        let mut covariance = DMatrix::zeros(q, q);
        for (p, l) in probs.iter().zip(&self.set.values) {
            for j in 0..q {
                for k in 0..q {
                    covariance[(j, k)] += p * (l[j] - means[j]) * (l[k] - means[k]);
                }
            }
        }
        GgeStats {
            probs,
            log_partition: top + sum.ln(),
            means,
            covariance,
        }
    }

    pub fn gge_state(&self, beta: &[f64]) -> Result<DensityMatrix> {
        self.check_beta(beta)?;
        Ok(DensityMatrix::from_eigen(self.stats(beta).probs, self.set.basis.clone()))
    }

    /// `d <L_j> / d beta_k = -Cov(L_j, L_k)`.
    pub fn jacobian(&self, beta: &[f64]) -> DMatrix<f64> {
        -self.stats(beta).covariance
    }

    pub fn charges_of(&self, rho: &DensityMatrix) -> Result<Vec<f64>> {
        self.set
            .charges
            .iter()
            .map(|c| operators::expectation(c, rho))
            .collect()
    }

    pub fn point_of(&self, rho: &DensityMatrix) -> Result<ChargesPoint> {
        Ok(ChargesPoint {
            charges: self.charges_of(rho)?,
            entropy: rho.entropy(),
        })
    }

    fn charge_scale(&self) -> f64 {
        self.set
            .values
            .iter()
            .flatten()
            .fold(1.0f64, |m, v| m.max(v.abs()))
    }

    /// Newton on the free coordinates of `beta` for
    /// `f = sum_{free} beta_i target_i + ln Z`, the fixed coordinates held
    /// at their `start` values.
    fn newton(&self, target: &[f64], free: &[bool], start: &[f64], floor: Option<f64>) -> Dual {
        let q = self.q();
        let idx: Vec<usize> = (0..q).filter(|&i| free[i]).collect();
        let scale = self.charge_scale();
        let objective = |beta: &[f64], st: &GgeStats| -> f64 {
            idx.iter().map(|&i| beta[i] * target[i]).sum::<f64>() + st.log_partition
        };
        let mut beta = start.to_vec();
        let mut st = self.stats(&beta);
        let mut f = objective(&beta, &st);
        for _ in 0..MAX_NEWTON {
            let g: Vec<f64> = idx.iter().map(|&i| target[i] - st.means[i]).collect();
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if let Some(fl) = floor {
                if f < fl {
                    return Dual::Below;
                }
            }
            if gmax <= 1e-13 * scale {
                return Dual::Converged { beta, value: f };
            }
            let n = idx.len();
            let h = DMatrix::from_fn(n, n, |a, b| st.covariance[(idx[a], idx[b])]);
            let rhs = DVector::from_vec(g.clone());
            let trace = h.trace().max(1e-300);
            let mut reg = 0.0;
            let step = loop {
                let m = &h + DMatrix::identity(n, n) * reg;
                if let Some(ch) = m.cholesky() {
                    break -ch.solve(&rhs);
                }
                reg = if reg == 0.0 { 1e-14 * trace } else { reg * 10.0 };
                if reg > trace {
                    return Dual::Failed(Error::SingularCovariance);
                }
            };
            let slope: f64 = step.iter().zip(&g).map(|(s, gi)| s * gi).sum();
            let mut t = 1.0;
            let mut accepted = false;
            while t > 1e-12 {
                let mut trial = beta.clone();
                for (a, &i) in idx.iter().enumerate() {
                    trial[i] += t * step[a];
                }
                let st_t = self.stats(&trial);
                let f_t = objective(&trial, &st_t);
                // Armijo on the convex dual; a stalled but non-increasing
                // value is accepted near the optimum
                if f_t <= f + 1e-4 * t * slope || (f_t <= f && gmax < 1e-9 * scale) {
                    beta = trial;
                    st = st_t;
                    f = f_t;
                    accepted = true;
                    break;
                }
                t *= 0.5;
            }
            if !accepted {
                break;
            }
            if beta.iter().any(|b| b.abs() > DIVERGED) {
                return Dual::Failed(Error::Infeasible(
                    "charge target on or outside the boundary of the attainable region".into(),
                ));
            }
        }
        let g = idx
            .iter()
            .map(|&i| (target[i] - st.means[i]).abs())
            .fold(0.0f64, f64::max);
        if g <= SOLVE_TOL {
            Dual::Converged { beta, value: f }
        } else {
            Dual::Failed(Error::NotConverged(format!(
                "GGE solve stalled with charge residual {g:.3e}"
            )))
        }
    }

    /// Newton with deterministic restarts from perturbed seeds.
    fn solve_with_restarts(&self, target: &[f64], free: &[bool], start: &[f64]) -> Result<Vec<f64>> {
        let mut last = None;
        for attempt in 0..=MAX_RESTARTS {
            let seed = if attempt == 0 {
                start.to_vec()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(0x6767_6500 + attempt as u64);
                let spread = attempt as f64 / self.charge_scale();
                start
                    .iter()
                    .zip(free)
                    .map(|(&b, &fr)| {
                        if fr {
                            b + spread * rng.sample::<f64, _>(StandardNormal)
                        } else {
                            b
                        }
                    })
                    .collect()
            };
            match self.newton(target, free, &seed, None) {
                Dual::Converged { beta, .. } => return Ok(beta),
                Dual::Failed(e @ (Error::Infeasible(_) | Error::SingularCovariance)) if attempt == 0 => {
                    last = Some(e);
                }
                Dual::Failed(e) => last = Some(e),
                Dual::Below => unreachable!("no floor given"),
            }
        }
        Err(last.expect("at least one attempt"))
    }

    /// The `beta` vector whose GGE has the target charges.
    pub fn gge_solve(&self, target: &[f64]) -> Result<Vec<f64>> {
        if target.len() != self.q() {
            return Err(Error::DimensionMismatch {
                expected: self.q(),
                found: target.len(),
            });
        }
        self.solve_with_restarts(target, &vec![true; self.q()], &vec![0.0; self.q()])
    }

    /// Largest entropy of a state with charges `target`, or `None` when
    /// that entropy is certainly below `floor` (including targets outside
    /// the attainable region).
    fn max_entropy_above(&self, target: &[f64], floor: f64) -> Option<f64> {
        match self.newton(target, &vec![true; self.q()], &vec![0.0; self.q()], Some(floor)) {
            Dual::Converged { value, .. } => Some(value),
            _ => None,
        }
    }

    /// Whether `(charges, entropy)` lies in the attainable region, up to
    /// `tol` in entropy.
    pub fn contains(&self, p: &ChargesPoint, tol: f64) -> bool {
        p.entropy >= -tol && self.max_entropy_above(&p.charges, p.entropy - tol).is_some()
    }
}

/// `sum_k beta_k L_k(rho) - S(rho) + ln Z`.
pub fn beta_vec_athermality(rho: &DensityMatrix, fam: &GgeFamily, beta: &[f64]) -> Result<f64> {
    fam.check_beta(beta)?;
    let l = fam.charges_of(rho)?;
    let lin: f64 = l.iter().zip(beta).map(|(x, b)| x * b).sum();
    Ok(lin - rho.entropy() + fam.log_partition(beta))
}

/// `min_beta A_beta(rho)`: the entropy gap to the GGE with the same
/// charges.
pub fn absolute_athermality_charges(rho: &DensityMatrix, fam: &GgeFamily) -> Result<f64> {
    let beta = fam.gge_solve(&fam.charges_of(rho)?)?;
    Ok(fam.stats(&beta).entropy() - rho.entropy())
}

#[derive(Debug, Clone)]
pub struct BoundCharge {
    pub value: f64,
    pub free: f64,
    pub beta: Option<Vec<f64>>,
    pub state: Option<DensityMatrix>,
    /// Found by the line scan rather than the GGE system (no GGE with
    /// `beta_k > 0` matches, e.g. for zero-entropy inputs).
    pub flagged: bool,
}

fn one_hot(q: usize, k: usize) -> Vec<bool> {
    (0..q).map(|i| i != k).collect()
}

/// Smallest value of charge `k` over states with the entropy and the other
/// charges of `rho`.
pub fn bound_charge(rho: &DensityMatrix, fam: &GgeFamily, k: usize) -> Result<BoundCharge> {
    let q = fam.q();
    if k >= q {
        return Err(Error::OutOfRange {
            quantity: "charge index",
            value: k as f64,
            lo: 0.0,
            hi: (q - 1) as f64,
        });
    }
    let target = fam.charges_of(rho)?;
    let s = rho.entropy();
    let free = one_hot(q, k);

    // beta_k = b fixed, the other multipliers matching the other charges
    let inner = |b: f64, warm: &[f64]| -> Result<(Vec<f64>, GgeStats)> {
        let mut start = warm.to_vec();
        start[k] = b;
        let beta = if q == 1 {
            start
        } else {
            fam.solve_with_restarts(&target, &free, &start)?
        };
        let st = fam.stats(&beta);
        Ok((beta, st))
    };

    let attempt = || -> Result<Option<(Vec<f64>, GgeStats)>> {
        let (b0, st0) = inner(0.0, &vec![0.0; q])?;
        if st0.entropy() <= s + 1e-12 {
            return Ok(Some((b0, st0)));
        }
        let scale = 1.0 / fam.charge_scale();
        let mut warm = b0;
        let mut lo = 0.0;
        let mut hi = scale;
        loop {
            let (beta, st) = inner(hi, &warm)?;
            if st.entropy() < s {
                warm = beta;
                break;
            }
            if hi > 1e6 * scale {
                return Ok(None);
            }
            lo = hi;
            warm = beta;
            hi *= 2.0;
        }
        let mut failure = None;
        let warm_ref = warm.clone();
        let b = roots::brent(
            |b| match inner(b, &warm_ref) {
                Ok((_, st)) => st.entropy() - s,
                Err(e) => {
                    failure.get_or_insert(e);
                    f64::NAN
                }
            },
            lo,
            hi,
            Tolerance::default(),
        )?;
        if let Some(e) = failure {
            return Err(e);
        }
        Ok(Some(inner(b, &warm)?))
    };

    match attempt() {
        Ok(Some((beta, st))) if beta[k] >= 0.0 => {
            let value = st.means[k];
            let state = DensityMatrix::from_eigen(st.probs, fam.set.basis.clone());
            let free = target[k] - value;
            Ok(BoundCharge {
                value,
                free: if free.abs() < energetics::FREE_ENERGY_ZERO { 0.0 } else { free },
                beta: Some(beta),
                state: Some(state),
                flagged: false,
            })
        }
        _ => bound_charge_scan(rho, fam, k),
    }
}

/// Line scan along charge `k` at fixed entropy and other charges: the
/// smallest `L_k` whose point is still attainable.
pub fn bound_charge_scan(rho: &DensityMatrix, fam: &GgeFamily, k: usize) -> Result<BoundCharge> {
    let target = fam.charges_of(rho)?;
    let s = rho.entropy();
    let lowest = fam.set.values.iter().map(|l| l[k]).fold(f64::INFINITY, f64::min);
    let inside = |x: f64| {
        let mut t = target.clone();
        t[k] = x;
        fam.contains(&ChargesPoint { charges: t, entropy: s }, 1e-12)
    };
    let value = if inside(lowest) {
        lowest
    } else {
        // the predicate holds on [x*, L_k(rho)]; bisect with the roles flipped
        let hi = target[k];
        let x = roots::bisect_predicate(|x| inside(hi - x), 0.0, hi - lowest, 1e-14);
        hi - x
    };
    let mut t = target.clone();
    t[k] = value;
    let beta = fam.gge_solve(&t).ok();
    let state = beta.as_ref().map(|b| DensityMatrix::from_eigen(fam.stats(b).probs, fam.set.basis.clone()));
    Ok(BoundCharge {
        value,
        free: target[k] - value,
        beta,
        state,
        flagged: true,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalisation {
    /// `|mu| = 1`.
    Euclidean,
    /// `mu_0 = 1`; rescaled to unit length internally.
    FirstUnit,
}

#[derive(Debug, Clone)]
pub struct BoundPotential {
    pub mu: Vec<f64>,
    pub potential: f64,
    pub bound: f64,
    pub free: f64,
    pub family: GibbsFamily,
}

/// Bound value of `V_mu = sum_k mu_k L_k`, treating it as a Hamiltonian.
pub fn bound_potential(
    rho: &DensityMatrix,
    fam: &GgeFamily,
    mu: &[f64],
    norm: Normalisation,
) -> Result<BoundPotential> {
    if mu.len() != fam.q() {
        return Err(Error::DimensionMismatch {
            expected: fam.q(),
            found: mu.len(),
        });
    }
    if mu.iter().any(|&m| !m.is_finite() || m < 0.0) {
        return Err(Error::Precondition("potential weights must be finite and non-negative".into()));
    }
    let length = mu.iter().map(|m| m * m).sum::<f64>().sqrt();
    match norm {
        Normalisation::Euclidean if (length - 1.0).abs() > 1e-9 => {
            return Err(Error::Precondition(format!("potential weights have length {length}, expected 1")));
        }
        Normalisation::FirstUnit if (mu[0] - 1.0).abs() > 1e-12 => {
            return Err(Error::Precondition("first potential weight must be 1".into()));
        }
        _ => {}
    }
    let mu: Vec<f64> = mu.iter().map(|m| m / length).collect();
    let h = HermitianOperator::linear_combination(&fam.set.charges, &mu)?;
    let family = GibbsFamily::new(h);
    let potential = energetics::energy(rho, &family)?;
    let bound = energetics::bound_energy(rho, &family)?;
    Ok(BoundPotential {
        mu,
        potential,
        bound,
        free: potential - bound,
        family,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChargesSecondLaw {
    /// `sum_k beta_k dL_k^B`.
    pub weighted_charge: f64,
    pub ds_a: f64,
    pub ds_b: f64,
    /// `sum_k beta_k dL_k^B >= dS_B`.
    pub bath_form: bool,
    /// `sum_k beta_k dL_k^B >= -dS_A`; `None` when the premise (global
    /// entropy preserved, initially uncorrelated) fails.
    pub system_form: Option<bool>,
}

/// Second law for a bath initially in `gamma_B(beta)`.
pub fn second_law_charges_check(
    initial: &DensityMatrix,
    final_: &DensityMatrix,
    split: &SubsystemSplit,
    fam_b: &GgeFamily,
    beta: &[f64],
) -> Result<ChargesSecondLaw> {
    if split.parts() != 2 || split.dims()[1] != fam_b.dim() {
        return Err(Error::InvalidSplit {
            dims: split.dims().to_vec(),
            dim: initial.dim(),
        });
    }
    split.check(initial.dim())?;
    split.check(final_.dim())?;
    let b0 = operators::partial_trace(initial, split, &[1])?;
    let b1 = operators::partial_trace(final_, split, &[1])?;
    if b0.max_abs_diff(&fam_b.gge_state(beta)?) > 1e-8 {
        return Err(Error::Precondition("bath is not initially in the given GGE".into()));
    }
    let a0 = operators::partial_trace(initial, split, &[0])?;
    let a1 = operators::partial_trace(final_, split, &[0])?;
    let (l0, l1) = (fam_b.charges_of(&b0)?, fam_b.charges_of(&b1)?);
    let weighted: f64 = beta.iter().zip(l1.iter().zip(&l0)).map(|(b, (x, y))| b * (x - y)).sum();
    let ds_a = a1.entropy() - a0.entropy();
    let ds_b = b1.entropy() - b0.entropy();
    let preserved = (final_.entropy() - initial.entropy()).abs() <= 1e-9;
    let uncorrelated = (a0.entropy() + b0.entropy() - initial.entropy()).abs() <= 1e-9;
    Ok(ChargesSecondLaw {
        weighted_charge: weighted,
        ds_a,
        ds_b,
        bath_form: weighted >= ds_b - 1e-9,
        system_form: (preserved && uncorrelated).then_some(weighted >= -ds_a - 1e-9),
    })
}

/// Haar unitary inside each joint eigenspace of `set`, so every charge is
/// conserved exactly.
pub fn charge_conserving_unitary<R: Rng + ?Sized>(set: &ChargeSet, rng: &mut R) -> CMatrix {
    let d = set.dim();
    let vals = &set.values;
    let scale = vals.iter().flatten().fold(1.0f64, |m, v| m.max(v.abs()));
    let mut assigned = vec![false; d];
    let mut blocked = CMatrix::zeros(d, d);
    for i in 0..d {
        if assigned[i] {
            continue;
        }
        let group: Vec<usize> = (i..d)
            .filter(|&j| !assigned[j] && vals[j].iter().zip(&vals[i]).all(|(a, b)| (a - b).abs() <= 1e-9 * scale))
            .collect();
        let u = haar_unitary(group.len(), rng);
        for (a, &ja) in group.iter().enumerate() {
            assigned[ja] = true;
            for (b, &jb) in group.iter().enumerate() {
                blocked[(ja, jb)] = u[(a, b)];
            }
        }
    }
    &set.basis * blocked * set.basis.adjoint()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChargesPhiKind {
    Pure,
    Thermal,
    SourceDegenerate,
    Coincident,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ChargesRate {
    pub r: f64,
    pub phi: ChargesPoint,
    pub phi_kind: ChargesPhiKind,
    pub collinearity_residual: f64,
    /// `S_max(L_phi) - S_phi`, zero on the curved boundary.
    pub boundary_gap: Option<f64>,
}

fn ray_point(sigma: &ChargesPoint, rho: &ChargesPoint, t: f64) -> ChargesPoint {
    ChargesPoint {
        charges: sigma
            .charges
            .iter()
            .zip(&rho.charges)
            .map(|(s, r)| s + t * (r - s))
            .collect(),
        entropy: sigma.entropy + t * (rho.entropy - sigma.entropy),
    }
}

/// Rate in the `(q + 1)`-dimensional charges-entropy diagram: `phi` is where
/// the half-line from `x_sigma` through `x_rho` leaves the region.
pub fn conversion_rate_charges(rho: &DensityMatrix, sigma: &DensityMatrix, fam: &GgeFamily) -> Result<ChargesRate> {
    let xr = fam.point_of(rho)?;
    let xs = fam.point_of(sigma)?;
    conversion_rate_charges_points(&xr, &xs, fam)
}

pub fn conversion_rate_charges_points(xr: &ChargesPoint, xs: &ChargesPoint, fam: &GgeFamily) -> Result<ChargesRate> {
    let gap = xr
        .charges
        .iter()
        .zip(&xs.charges)
        .map(|(a, b)| (a - b).abs())
        .fold((xr.entropy - xs.entropy).abs(), f64::max);
    if gap <= 1e-12 {
        return Ok(ChargesRate {
            r: 1.0,
            phi: xr.clone(),
            phi_kind: ChargesPhiKind::Coincident,
            collinearity_residual: 0.0,
            boundary_gap: None,
        });
    }
    let inside = |t: f64| fam.contains(&ray_point(xs, xr, t), 1e-13);
    let ds = xr.entropy - xs.entropy;
    let t_pure = if ds < 0.0 { -xs.entropy / ds } else { f64::INFINITY };
    let on_edge = |t: f64| !inside(t * (1.0 + 1e-9) + 1e-12);
    if on_edge(1.0) {
        return Ok(ChargesRate {
            r: 0.0,
            phi: xr.clone(),
            phi_kind: ChargesPhiKind::SourceDegenerate,
            collinearity_residual: 0.0,
            boundary_gap: None,
        });
    }
    let mut hi = 2.0;
    while inside(hi) {
        hi *= 2.0;
        if hi > 1e12 {
            return Err(Error::NotConverged("ray never leaves the charge region".into()));
        }
    }
    let mut t = roots::bisect_predicate(inside, 1.0, hi, 1e-15);
    let pure = t_pure.is_finite() && (t - t_pure).abs() <= 1e-9 * t_pure;
    if pure {
        t = t_pure;
    }
    let mut phi = ray_point(xs, xr, t);
    if pure {
        phi.entropy = 0.0;
    }
    let r = (1.0 - 1.0 / t).clamp(0.0, 1.0);
    let mut residual = (xr.entropy - (r * xs.entropy + (1.0 - r) * phi.entropy)).abs();
    for ((a, b), c) in xr.charges.iter().zip(&xs.charges).zip(&phi.charges) {
        residual = residual.max((a - (r * b + (1.0 - r) * c)).abs());
    }
    let boundary_gap = fam
        .gge_solve(&phi.charges)
        .ok()
        .map(|b| fam.stats(&b).entropy() - phi.entropy);
    Ok(ChargesRate {
        r,
        phi,
        phi_kind: if pure { ChargesPhiKind::Pure } else { ChargesPhiKind::Thermal },
        collinearity_residual: residual,
        boundary_gap,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gibbs::Beta;
    use crate::random::{random_state, trial_rng};
    use crate::resource;
    use approx::assert_abs_diff_eq;
    use num_complex::Complex64;

    fn fixture() -> GgeFamily {
        GgeFamily::from_charges(vec![
            HermitianOperator::from_diagonal(&[0.0, 1.0, 2.0, 3.0]).unwrap(),
            HermitianOperator::from_diagonal(&[0.0, 1.0, 1.0, 2.0]).unwrap(),
        ])
        .unwrap()
    }

    fn diag(p: &[f64]) -> DensityMatrix {
        DensityMatrix::from_diagonal(p).unwrap()
    }

    #[test]
    fn non_commuting_charges_are_rejected() {
        let x = CMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0].map(|v| Complex64::new(v, 0.0)));
        let err = ChargeSet::new(vec![
            HermitianOperator::from_diagonal(&[0.0, 1.0]).unwrap(),
            HermitianOperator::new(x).unwrap(),
        ])
        .unwrap_err();
        assert!(matches!(err, Error::NonCommuting(_)));
    }

    #[test]
    fn gge_state_examples() {
        let fam = fixture();
        let g = fam.gge_state(&[2f64.ln(), 0.0]).unwrap();
        let z: f64 = 1.0 + 0.5 + 0.25 + 0.125;
        for (i, p) in [1.0, 0.5, 0.25, 0.125].iter().enumerate() {
            assert_abs_diff_eq!(g.matrix()[(i, i)].re, p / z, epsilon = 1e-14);
        }
        assert!(fam.gge_state(&[0.0, 0.0]).unwrap().max_abs_diff(&DensityMatrix::maximally_mixed(4)) < 1e-15);
    }

    #[test]
    fn solve_round_trip_and_centre() {
        let fam = fixture();
        let target = fam.stats(&[0.7, -0.3]).means;
        let beta = fam.gge_solve(&target).unwrap();
        assert!((beta[0] - 0.7).abs() <= 1e-7 && (beta[1] + 0.3).abs() <= 1e-7, "{beta:?}");
        let beta = fam.gge_solve(&[1.5, 1.0]).unwrap();
        assert!(beta.iter().all(|b| b.abs() < 1e-12));
    }

    #[test]
    fn infeasible_targets_are_reported() {
        let fam = fixture();
        assert!(fam.gge_solve(&[5.0, 1.0]).is_err());
        // L_0 = 0 forces the ground vector, which has L_1 = 0
        assert!(fam.gge_solve(&[0.0, 0.5]).is_err());
    }

    #[test]
    fn jacobian_matches_finite_differences() {
        let fam = fixture();
        let beta = [0.4, -0.9];
        let jac = fam.jacobian(&beta);
        let h = 1e-6;
        for k in 0..2 {
            let mut up = beta;
            let mut dn = beta;
            up[k] += h;
            dn[k] -= h;
            let (mu, md) = (fam.stats(&up).means, fam.stats(&dn).means);
            for j in 0..2 {
                assert!(((mu[j] - md[j]) / (2.0 * h) - jac[(j, k)]).abs() <= 1e-5);
            }
        }
    }

    #[test]
    fn athermality_two_ways() {
        let fam = fixture();
        let mut rng = trial_rng(61, 0);
        for _ in 0..20 {
            let rho = random_state(4, &mut rng);
            let beta = [rng.random_range(-2.0..2.0), rng.random_range(-2.0..2.0)];
            let a = beta_vec_athermality(&rho, &fam, &beta).unwrap();
            let d = operators::relative_entropy(&rho, &fam.gge_state(&beta).unwrap()).unwrap();
            assert!((a - d).abs() <= 1e-8 && a >= -1e-10);
        }
        let g = fam.gge_state(&[0.3, 0.2]).unwrap();
        assert!(absolute_athermality_charges(&g, &fam).unwrap().abs() < 1e-10);
        let rho = diag(&[0.4, 0.3, 0.2, 0.1]);
        let a = absolute_athermality_charges(&rho, &fam).unwrap();
        assert!(a > 0.0);
    }

    #[test]
    fn single_charge_reductions() {
        let h = HermitianOperator::from_diagonal(&[0.0, 0.4, 1.3]).unwrap();
        let fam = GgeFamily::from_charges(vec![h.clone()]).unwrap();
        let gf = GibbsFamily::new(h);
        assert!(fam.gge_state(&[0.8]).unwrap().max_abs_diff(&gf.gibbs_state(Beta::Finite(0.8))) < 1e-14);
        let rho = diag(&[0.2, 0.5, 0.3]);
        let e = energetics::energy(&rho, &gf).unwrap();
        let b = fam.gge_solve(&[e]).unwrap()[0];
        assert_abs_diff_eq!(b, gf.spontaneous_beta(e).unwrap().value(), epsilon = 1e-8);
        assert_abs_diff_eq!(
            beta_vec_athermality(&rho, &fam, &[0.8]).unwrap(),
            energetics::beta_athermality(&rho, &gf, 0.8).unwrap(),
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            absolute_athermality_charges(&rho, &fam).unwrap(),
            energetics::athermality(&rho, &gf).unwrap(),
            epsilon = 1e-8
        );
        let bc = bound_charge(&rho, &fam, 0).unwrap();
        assert!(!bc.flagged);
        assert_abs_diff_eq!(bc.value, energetics::bound_energy(&rho, &gf).unwrap(), epsilon = 1e-8);
        let bp = bound_potential(&rho, &fam, &[1.0], Normalisation::Euclidean).unwrap();
        assert_abs_diff_eq!(bp.bound, energetics::bound_energy(&rho, &gf).unwrap(), epsilon = 1e-12);
        let sigma = DensityMatrix::maximally_mixed(3);
        let r1 = conversion_rate_charges(&rho, &sigma, &fam).unwrap();
        let r0 = resource::conversion_rate(&rho, &sigma, &gf).unwrap();
        assert_abs_diff_eq!(r1.r, r0.r, epsilon = 1e-8);
    }

    #[test]
    fn bound_charge_fixture_matches_scan() {
        let fam = fixture();
        let rho = diag(&[0.4, 0.3, 0.2, 0.1]);
        let bc = bound_charge(&rho, &fam, 0).unwrap();
        assert!(!bc.flagged);
        assert!(bc.beta.as_ref().unwrap()[0] > 0.0);
        let scan = bound_charge_scan(&rho, &fam, 0).unwrap();
        assert_abs_diff_eq!(bc.value, scan.value, epsilon = 1e-8);
        // constraints hold at the minimiser
        let g = bc.state.unwrap();
        assert_abs_diff_eq!(g.entropy(), rho.entropy(), epsilon = 1e-9);
        assert_abs_diff_eq!(fam.charges_of(&g).unwrap()[1], fam.charges_of(&rho).unwrap()[1], epsilon = 1e-9);
        assert!(bc.free > 0.0);

        let g = fam.gge_state(&[0.9, 0.4]).unwrap();
        let bc = bound_charge(&g, &fam, 0).unwrap();
        assert!(bc.free.abs() < 1e-9);
    }

    #[test]
    fn pure_inputs_fall_back_to_the_scan() {
        let fam = fixture();
        let rho = diag(&[0.0, 1.0, 0.0, 0.0]);
        let bc = bound_charge(&rho, &fam, 0).unwrap();
        assert!(bc.flagged);
        assert_abs_diff_eq!(bc.value, 1.0, epsilon = 1e-9);
    }

    #[test]
    fn potential_matches_single_charge_pipeline() {
        let fam = fixture();
        let rho = diag(&[0.4, 0.3, 0.2, 0.1]);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let bp = bound_potential(&rho, &fam, &[s, s], Normalisation::Euclidean).unwrap();
        let h = HermitianOperator::from_diagonal(&[0.0, 2.0 * s, 3.0 * s, 5.0 * s]).unwrap();
        let gf = GibbsFamily::new(h);
        assert_abs_diff_eq!(bp.bound, energetics::bound_energy(&rho, &gf).unwrap(), epsilon = 1e-12);
        let alt = bound_potential(&rho, &fam, &[1.0, 1.0], Normalisation::FirstUnit).unwrap();
        assert_abs_diff_eq!(alt.bound, bp.bound, epsilon = 1e-12);
        let g = bp.family.gibbs_state(Beta::Finite(1.2));
        let bp = bound_potential(&g, &fam, &[s, s], Normalisation::Euclidean).unwrap();
        assert!(bp.free.abs() < 1e-10);
        assert!(bound_potential(&rho, &fam, &[0.5, 0.5], Normalisation::Euclidean).is_err());
    }

    #[test]
    fn second_law_on_conserving_processes() {
        let fa = fixture();
        let fb = fixture();
        let total = fa.charge_set().kron_sum(fb.charge_set()).unwrap();
        let split = SubsystemSplit::bipartite(4, 4).unwrap();
        let beta = [0.6, 0.3];
        for trial in 0..50 {
            let mut rng = trial_rng(62, trial);
            let initial = operators::tensor(&random_state(4, &mut rng), &fb.gge_state(&beta).unwrap());
            let u = charge_conserving_unitary(&total, &mut rng);
            let final_ = initial.conjugate(&u).unwrap();
            let c = second_law_charges_check(&initial, &final_, &split, &fb, &beta).unwrap();
            assert!(c.bath_form);
            assert_eq!(c.system_form, Some(true));
            // charges are conserved exactly
            let t0: Vec<f64> = total.charges().iter().map(|l| operators::expectation(l, &initial).unwrap()).collect();
            let t1: Vec<f64> = total.charges().iter().map(|l| operators::expectation(l, &final_).unwrap()).collect();
            for (a, b) in t0.iter().zip(&t1) {
                assert!((a - b).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn zero_entropy_surface_is_convex() {
        let fam = fixture();
        let basis = fam.charge_set().basis();
        let vals = fam.charge_set().joint_values();
        for (i, j, th) in [(0, 3, 0.3), (1, 2, 1.1), (0, 1, 0.7)] {
            let (c, s) = (f64::cos(th), f64::sin(th));
            let psi: Vec<Complex64> = (0..4).map(|r| basis[(r, i)] * c + basis[(r, j)] * s).collect();
            let rho = DensityMatrix::pure(&psi).unwrap();
            let l = fam.charges_of(&rho).unwrap();
            for k in 0..2 {
                assert!((l[k] - (c * c * vals[i][k] + s * s * vals[j][k])).abs() <= 1e-10);
            }
        }
    }

    #[test]
    fn charges_rate_fixture() {
        let fam = fixture();
        let rho = diag(&[0.4, 0.3, 0.2, 0.1]);
        let sigma = DensityMatrix::maximally_mixed(4);
        let sol = conversion_rate_charges(&rho, &sigma, &fam).unwrap();
        assert!(sol.collinearity_residual <= 1e-8);
        assert!(sol.r > 0.0 && sol.r < 1.0);
        if sol.phi_kind == ChargesPhiKind::Thermal {
            assert!(sol.boundary_gap.unwrap().abs() <= 1e-8);
        }
        // r from the entropy formula
        let r = (rho.entropy() - sol.phi.entropy) / (sigma.entropy() - sol.phi.entropy);
        assert_abs_diff_eq!(sol.r, r, epsilon = 1e-8);
    }

    #[test]
    fn hyperplanes_bound_the_region() {
        let fam = fixture();
        let mut rng = trial_rng(63, 0);
        for _ in 0..100 {
            let rho = random_state(4, &mut rng);
            let beta = [rng.random_range(-3.0..3.0), rng.random_range(-3.0..3.0)];
            let l = fam.charges_of(&rho).unwrap();
            let plane = beta[0] * l[0] + beta[1] * l[1] + fam.log_partition(&beta);
            assert!(rho.entropy() <= plane + 1e-12);
        }
    }
}
