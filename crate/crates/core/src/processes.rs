//! Heat and work for entropy-preserving processes on a system `A` and an
//! environment `B`, the second-law statements as checkable predicates, the
//! finite-bath engine and the erasure cost.
//!
//! Heat is the change of the environment's bound energy. Work is the
//! change of the total energy, and the work done on `A` is that minus the
//! change of the environment's free energy.

use rand::Rng;

use crate::energetics::{self, bound_energy, raw_free_energy};
use crate::equilibrium::{joint_family, Composite};
use crate::gibbs::{Beta, GibbsFamily};
use crate::operators::{self, DensityMatrix, SubsystemSplit};
use crate::quadrature;
use crate::random::{haar_unitary, random_state};
use crate::{Error, Result};

/// Allowed drift of the joint entropy along a process.
pub const ENTROPY_TOL: f64 = 1e-9;
/// Slack for inequalities whose sides come out of root solvers.
pub const LAW_SLACK: f64 = 1e-9;
/// A marginal counts as thermal when it is this close (max-abs) to its own
/// Gibbs state.
pub const THERMAL_TOL: f64 = 1e-8;

#[derive(Debug, Clone)]
pub struct ProcessRecord {
    initial: DensityMatrix,
    final_: DensityMatrix,
    split: SubsystemSplit,
    fam_a: GibbsFamily,
    fam_b: GibbsFamily,
    // marginals: [initial A, initial B, final A, final B]
    marginals: [DensityMatrix; 4],
}

impl ProcessRecord {
    pub fn new(
        initial: DensityMatrix,
        final_: DensityMatrix,
        fam_a: GibbsFamily,
        fam_b: GibbsFamily,
    ) -> Result<Self> {
        let split = SubsystemSplit::bipartite(fam_a.dim(), fam_b.dim())?;
        split.check(initial.dim())?;
        split.check(final_.dim())?;
        let (before, after) = (initial.entropy(), final_.entropy());
        if (before - after).abs() > ENTROPY_TOL {
            return Err(Error::EntropyNotPreserved { before, after });
        }
        let marginals = [
            operators::partial_trace(&initial, &split, &[0])?,
            operators::partial_trace(&initial, &split, &[1])?,
            operators::partial_trace(&final_, &split, &[0])?,
            operators::partial_trace(&final_, &split, &[1])?,
        ];
        Ok(ProcessRecord {
            initial,
            final_,
            split,
            fam_a,
            fam_b,
            marginals,
        })
    }

    /// `rho -> U rho U^dagger`.
    pub fn unitary(
        initial: DensityMatrix,
        u: &operators::CMatrix,
        fam_a: GibbsFamily,
        fam_b: GibbsFamily,
    ) -> Result<Self> {
        let final_ = initial.conjugate(u)?;
        Self::new(initial, final_, fam_a, fam_b)
    }

    pub fn identity(initial: DensityMatrix, fam_a: GibbsFamily, fam_b: GibbsFamily) -> Result<Self> {
        let final_ = initial.clone();
        Self::new(initial, final_, fam_a, fam_b)
    }

    pub fn initial(&self) -> &DensityMatrix {
        &self.initial
    }

    pub fn final_state(&self) -> &DensityMatrix {
        &self.final_
    }

    pub fn split(&self) -> &SubsystemSplit {
        &self.split
    }

    pub fn fam_a(&self) -> &GibbsFamily {
        &self.fam_a
    }

    pub fn fam_b(&self) -> &GibbsFamily {
        &self.fam_b
    }

    pub fn initial_a(&self) -> &DensityMatrix {
        &self.marginals[0]
    }

    pub fn initial_b(&self) -> &DensityMatrix {
        &self.marginals[1]
    }

    pub fn final_a(&self) -> &DensityMatrix {
        &self.marginals[2]
    }

    pub fn final_b(&self) -> &DensityMatrix {
        &self.marginals[3]
    }

    pub fn joint_family(&self) -> Result<GibbsFamily> {
        joint_family(&[&self.fam_a, &self.fam_b], &self.split)
    }

    /// Short stable fingerprint of the record, for reporting failures.
    pub fn describe(&self) -> String {
        let fmt = |m: &DensityMatrix| {
            m.matrix()
                .iter()
                .map(|z| format!("{:.17e},{:.17e}", z.re, z.im))
                .collect::<Vec<_>>()
                .join(";")
        };
        format!(
            "dims={:?} initial=[{}] final=[{}] h_a={:?} h_b={:?}",
            self.split.dims(),
            fmt(&self.initial),
            fmt(&self.final_),
            self.fam_a.levels(),
            self.fam_b.levels()
        )
    }
}

/// Every bookkeeping quantity of a process. Differences are final minus
/// initial.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LedgerEntry {
    pub dq: f64,
    pub w: f64,
    pub dw_a: f64,
    pub de_a: f64,
    pub de_b: f64,
    pub db_a: f64,
    pub db_b: f64,
    pub df_a: f64,
    pub df_b: f64,
    pub ds_a: f64,
    pub ds_b: f64,
    pub di: f64,
}

impl LedgerEntry {
    /// `dE_A - (dW_A - dQ)`.
    pub fn first_law_residual(&self) -> f64 {
        self.de_a - (self.dw_a - self.dq)
    }

    /// `dQ_A + dQ_B + (dF_A + dF_B) - W`, heat on both sides being the
    /// bound-energy change.
    pub fn kelvin_planck_residual(&self) -> f64 {
        self.db_a + self.db_b + (self.df_a + self.df_b) - self.w
    }
}

struct Local {
    e: f64,
    s: f64,
    b: f64,
}

fn local(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<Local> {
    Ok(Local {
        e: energetics::energy(rho, fam)?,
        s: rho.entropy(),
        b: bound_energy(rho, fam)?,
    })
}

pub fn work_ledger(p: &ProcessRecord) -> Result<LedgerEntry> {
    let a0 = local(p.initial_a(), &p.fam_a)?;
    let b0 = local(p.initial_b(), &p.fam_b)?;
    let a1 = local(p.final_a(), &p.fam_a)?;
    let b1 = local(p.final_b(), &p.fam_b)?;
    let (de_a, de_b) = (a1.e - a0.e, b1.e - b0.e);
    let (db_a, db_b) = (a1.b - a0.b, b1.b - b0.b);
    let df_a = de_a - db_a;
    let df_b = de_b - db_b;
    let w = de_a + de_b;
    let i0 = a0.s + b0.s - p.initial.entropy();
    let i1 = a1.s + b1.s - p.final_.entropy();
    Ok(LedgerEntry {
        dq: db_b,
        w,
        dw_a: w - df_b,
        de_a,
        de_b,
        db_a,
        db_b,
        df_a,
        df_b,
        ds_a: a1.s - a0.s,
        ds_b: b1.s - b0.s,
        di: i1 - i0,
    })
}

/// Heat: change of the environment's bound energy.
pub fn heat(p: &ProcessRecord) -> Result<f64> {
    Ok(bound_energy(p.final_b(), &p.fam_b)? - bound_energy(p.initial_b(), &p.fam_b)?)
}

/// Temperature of the thermal state of `fam` with entropy `s`.
pub fn temperature_at_entropy(fam: &GibbsFamily, s: f64) -> Result<f64> {
    Ok(fam.intrinsic_beta(s.min(fam.max_entropy()))?.temperature())
}

/// `int_{S_B}^{S'_B} T(s) ds - dQ`, the integral done by adaptive
/// quadrature over the temperature profile.
pub fn heat_integral_check(p: &ProcessRecord) -> Result<f64> {
    let s0 = p.initial_b().entropy();
    let s1 = p.final_b().entropy();
    let fam = &p.fam_b;
    if fam.ground_degeneracy() > 1 && s0.min(s1) < fam.ground_entropy() {
        return Err(Error::Unsupported(
            "entropy segment enters the region below the ground-space entropy".into(),
        ));
    }
    let dq = heat(p)?;
    if s0 == s1 {
        return Ok(-dq);
    }
    let mut failure = None;
    let integral = quadrature::integrate(
        |s| match temperature_at_entropy(fam, s) {
            Ok(t) => t,
            Err(e) => {
                failure.get_or_insert(e);
                0.0
            }
        },
        s0,
        s1,
        1e-10,
    )?;
    if let Some(e) = failure {
        return Err(e);
    }
    Ok(integral - dq)
}

/// The mean heat per unit entropy lies between the end-point temperatures.
pub fn heat_mean_value_check(p: &ProcessRecord) -> Result<bool> {
    let s0 = p.initial_b().entropy();
    let s1 = p.final_b().entropy();
    if (s1 - s0).abs() < 1e-12 {
        return Ok(true);
    }
    let ratio = heat(p)? / (s1 - s0);
    let t0 = temperature_at_entropy(&p.fam_b, s0)?;
    let t1 = temperature_at_entropy(&p.fam_b, s1)?;
    let slack = LAW_SLACK * ratio.abs().max(1.0);
    Ok(t0.min(t1) - slack <= ratio && ratio <= t0.max(t1) + slack)
}

fn thermal_beta(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<Option<Beta>> {
    let beta = fam.intrinsic_beta(rho.entropy())?;
    let gamma = fam.gibbs_state(beta);
    Ok((rho.max_abs_diff(&gamma) <= THERMAL_TOL).then_some(beta))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HeatBounds {
    /// `T dS_B`, with `T` the initial bath temperature.
    pub lower: f64,
    pub heat: f64,
    /// `dE_B`.
    pub upper: f64,
    pub holds: bool,
}

/// `T dS_B <= dQ <= dE_B` for an initially thermal environment.
pub fn heat_bounds_check(p: &ProcessRecord) -> Result<HeatBounds> {
    let beta = thermal_beta(p.initial_b(), &p.fam_b)?
        .ok_or_else(|| Error::Precondition("environment is not initially thermal".into()))?;
    let ds = p.final_b().entropy() - p.initial_b().entropy();
    let lower = match beta {
        Beta::Finite(b) if b > 0.0 => ds / b,
        Beta::PosInf => 0.0,
        // infinite temperature: the entropy can only drop
        _ if ds.abs() < 1e-12 => 0.0,
        _ => f64::NEG_INFINITY,
    };
    let dq = heat(p)?;
    let upper = energetics::energy(p.final_b(), &p.fam_b)? - energetics::energy(p.initial_b(), &p.fam_b)?;
    let holds = lower <= dq + LAW_SLACK && dq <= upper + LAW_SLACK;
    Ok(HeatBounds {
        lower,
        heat: dq,
        upper,
        holds,
    })
}

/// Best work obtainable from `rho` alone and the final state reaching it.
/// The witness is absent when the bound energy is not attained inside the
/// Gibbs family (degenerate ground space).
pub fn extractable_work(rho: &DensityMatrix, fam: &GibbsFamily) -> Result<(f64, Option<DensityMatrix>)> {
    let f = energetics::free_energy(rho, fam)?;
    let witness = match fam.intrinsic_beta(rho.entropy())? {
        Beta::PosInf if fam.ground_degeneracy() > 1 && rho.entropy() < fam.ground_entropy() - 1e-12 => None,
        beta => Some(fam.gibbs_state(beta)),
    };
    Ok((f, witness))
}

/// Work extractable from `rho_a` together with `copies` independent
/// thermal copies of a bath at `beta_b`.
pub fn extractable_work_with_bath(
    rho_a: &DensityMatrix,
    fam_a: &GibbsFamily,
    fam_b: &GibbsFamily,
    beta_b: f64,
    copies: usize,
) -> Result<f64> {
    let bath = Beta::Finite(beta_b);
    let n = copies as f64;
    let composite = Composite::new(vec![(fam_a, 1), (fam_b, copies)]);
    let s = rho_a.entropy() + n * fam_b.boundary_entropy(bath);
    let e = energetics::energy(rho_a, fam_a)? + n * fam_b.boundary_energy(bath);
    let (beta, _) = composite.beta_for_entropy(s)?;
    let b = match beta {
        Beta::PosInf => fam_a.e_min() + n * fam_b.e_min(),
        _ => composite.energy(beta),
    };
    Ok(e - b)
}

/// `W <= F(rho)`: energy drawn from the joint state never exceeds its free
/// energy. Returns `(extracted, bound, holds)`.
pub fn work_extraction_check(p: &ProcessRecord) -> Result<(f64, f64, bool)> {
    let joint = p.joint_family()?;
    let extracted = energetics::energy(&p.initial, &joint)? - energetics::energy(&p.final_, &joint)?;
    let bound = raw_free_energy(&p.initial, &joint)?;
    Ok((extracted, bound, extracted <= bound + LAW_SLACK))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClausiusCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// `(T_B - T_A) dS_A >= dF_A + dF_B + T_B dI - W` with the initial
/// intrinsic temperatures.
pub fn clausius_check(p: &ProcessRecord) -> Result<ClausiusCheck> {
    let temperature = |rho: &DensityMatrix, fam: &GibbsFamily| -> Result<f64> {
        match fam.intrinsic_beta(rho.entropy())? {
            Beta::Finite(b) if b > 0.0 => Ok(1.0 / b),
            _ => Err(Error::Unsupported(
                "marginal temperature is zero or infinite".into(),
            )),
        }
    };
    let ta = temperature(p.initial_a(), &p.fam_a)?;
    let tb = temperature(p.initial_b(), &p.fam_b)?;
    let l = work_ledger(p)?;
    let lhs = (tb - ta) * l.ds_a;
    let rhs = l.df_a + l.df_b + tb * l.di - l.w;
    // rounding in the entropies is amplified by the temperatures
    let slack = LAW_SLACK * ta.max(tb).max(1.0);
    Ok(ClausiusCheck {
        lhs,
        rhs,
        holds: lhs >= rhs - slack,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KelvinPlanck {
    pub dq_a: f64,
    pub dq_b: f64,
    pub balance_residual: f64,
    /// `dQ_A + dQ_B <= W`, evaluated only for thermal marginals and `W < 0`.
    pub corollary: Option<bool>,
}

pub fn kelvin_planck_check(p: &ProcessRecord) -> Result<KelvinPlanck> {
    let l = work_ledger(p)?;
    let thermal = thermal_beta(p.initial_a(), &p.fam_a)?.is_some()
        && thermal_beta(p.initial_b(), &p.fam_b)?.is_some();
    let corollary = (thermal && l.w < 0.0).then_some(l.db_a + l.db_b <= l.w + LAW_SLACK);
    Ok(KelvinPlanck {
        dq_a: l.db_a,
        dq_b: l.db_b,
        balance_residual: l.kelvin_planck_residual(),
        corollary,
    })
}

/// A bath made of `copies` independent thermal copies of one body.
#[derive(Debug, Clone, Copy)]
pub struct Bath<'a> {
    pub family: &'a GibbsFamily,
    pub beta: f64,
    pub copies: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineRun {
    pub work: f64,
    pub efficiency: f64,
    /// `1 - dB_A / (-dB_B)`.
    pub bound_finite: f64,
    /// `1 - T_A / T_B`.
    pub bound_carnot: f64,
    pub beta_joint: f64,
    pub de_a: f64,
    pub de_b: f64,
    pub db_a: f64,
    pub db_b: f64,
}

impl EngineRun {
    pub fn gap(&self) -> f64 {
        self.bound_carnot - self.efficiency
    }

    pub fn bounds_hold(&self) -> bool {
        self.efficiency <= self.bound_finite + LAW_SLACK
            && self.bound_finite <= 1.0 + LAW_SLACK
            && self.efficiency <= self.bound_carnot + LAW_SLACK
    }
}

/// One engine stroke: the cold bath `A` and the hot bath `B` equilibrate
/// iso-entropically and the released energy is the work.
pub fn carnot_engine(cold: Bath, hot: Bath) -> Result<EngineRun> {
    let (ba, bb) = (cold.beta, hot.beta);
    if !(ba.is_finite() && bb.is_finite() && bb > 0.0) || cold.copies == 0 || hot.copies == 0 {
        return Err(Error::Precondition("engine needs finite positive temperatures and non-empty baths".into()));
    }
    if (ba - bb).abs() <= 1e-12 * ba.abs().max(1.0) {
        return Err(Error::Degenerate("equal bath temperatures: no heat is drawn".into()));
    }
    if ba < bb {
        return Err(Error::Precondition(format!(
            "bath A must be the colder one (beta_A = {ba} < beta_B = {bb})"
        )));
    }
    let (na, nb) = (cold.copies as f64, hot.copies as f64);
    let composite = Composite::new(vec![(cold.family, cold.copies), (hot.family, hot.copies)]);
    let (pa, pb) = (
        cold.family.thermal_point(Beta::Finite(ba)),
        hot.family.thermal_point(Beta::Finite(bb)),
    );
    let (beta, _) = composite.beta_for_entropy(na * pa.entropy + nb * pb.entropy)?;
    let beta_joint = beta
        .finite()
        .ok_or_else(|| Error::Degenerate("joint equilibrium at zero temperature".into()))?;
    let qa = cold.family.thermal_point(beta);
    let qb = hot.family.thermal_point(beta);
    let de_a = na * (qa.energy - pa.energy);
    let de_b = nb * (qb.energy - pb.energy);
    if de_b >= 0.0 {
        return Err(Error::Degenerate("no heat drawn from the hot bath".into()));
    }
    // thermal in and out, so the bound energies track the energies
    let (db_a, db_b) = (de_a, de_b);
    let work = -(de_a + de_b);
    Ok(EngineRun {
        work,
        efficiency: work / -de_b,
        bound_finite: 1.0 - db_a / -db_b,
        bound_carnot: 1.0 - bb / ba,
        beta_joint,
        de_a,
        de_b,
        db_a,
        db_b,
    })
}

/// Engine runs with `n` copies of each bath, for every `n` in `copies`.
pub fn carnot_gap_table(
    cold: &GibbsFamily,
    beta_cold: f64,
    hot: &GibbsFamily,
    beta_hot: f64,
    copies: &[usize],
) -> Result<Vec<(usize, EngineRun)>> {
    copies
        .iter()
        .map(|&n| {
            let run = carnot_engine(
                Bath { family: cold, beta: beta_cold, copies: n },
                Bath { family: hot, beta: beta_hot, copies: n },
            )?;
            Ok((n, run))
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct Erasure {
    pub feasible: bool,
    pub work_cost: Option<f64>,
    pub final_bath: Option<DensityMatrix>,
    pub beta_final: Option<Beta>,
}

/// Resetting `rho_s` to the ground state of `H_S` by dumping its entropy
/// into a thermal bath.
pub fn erasure(
    rho_s: &DensityMatrix,
    fam_s: &GibbsFamily,
    rho_b: &DensityMatrix,
    fam_b: &GibbsFamily,
) -> Result<Erasure> {
    if thermal_beta(rho_b, fam_b)?.is_none() {
        return Err(Error::Precondition("erasure bath must be thermal".into()));
    }
    let (ss, sb) = (rho_s.entropy(), rho_b.entropy());
    if ss > fam_b.max_entropy() - sb + 1e-12 {
        return Ok(Erasure {
            feasible: false,
            work_cost: None,
            final_bath: None,
            beta_final: None,
        });
    }
    let beta = fam_b.intrinsic_beta((sb + ss).min(fam_b.max_entropy()))?;
    let final_bath = fam_b.gibbs_state(beta);
    let ground = fam_s.gibbs_state(Beta::PosInf);
    let ground = if fam_s.ground_degeneracy() == 1 {
        ground
    } else {
        // pick one ground vector
        let v: Vec<_> = fam_s.hamiltonian().eigenvectors().column(0).iter().copied().collect();
        DensityMatrix::pure(&v)?
    };
    let split = SubsystemSplit::bipartite(fam_s.dim(), fam_b.dim())?;
    let joint = joint_family(&[fam_s, fam_b], &split)?;
    let before = raw_free_energy(&operators::tensor(rho_s, rho_b), &joint)?;
    let after = raw_free_energy(&operators::tensor(&ground, &final_bath), &joint)?;
    Ok(Erasure {
        feasible: true,
        work_cost: Some(after - before),
        final_bath: Some(final_bath),
        beta_final: Some(beta),
    })
}

/// Random entropy-preserving process: a Haar unitary applied to a random
/// joint state, or to `rho_A (x) gamma_B(beta)` when `thermal_b` is set.
pub fn random_process<R: Rng + ?Sized>(
    fam_a: &GibbsFamily,
    fam_b: &GibbsFamily,
    thermal_b: Option<Beta>,
    rng: &mut R,
) -> Result<ProcessRecord> {
    let (da, db) = (fam_a.dim(), fam_b.dim());
    let initial = match thermal_b {
        Some(beta) => operators::tensor(&random_state(da, rng), &fam_b.gibbs_state(beta)),
        None => random_state(da * db, rng),
    };
    let u = haar_unitary(da * db, rng);
    ProcessRecord::unitary(initial, &u, fam_a.clone(), fam_b.clone())
}

/// Outcome of every law check on one random process.
#[derive(Debug, Clone)]
pub struct LawTrial {
    pub index: u64,
    pub ledger: LedgerEntry,
    pub clausius: ClausiusCheck,
    pub extraction: (f64, f64, bool),
    pub record: ProcessRecord,
}

impl LawTrial {
    /// Names of the checks that failed; empty when the trial passes.
    pub fn failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.ledger.first_law_residual().abs() > 1e-12 {
            out.push("first-law");
        }
        if self.ledger.kelvin_planck_residual().abs() > 1e-10 {
            out.push("kelvin-planck");
        }
        if !self.clausius.holds {
            out.push("clausius");
        }
        if !self.extraction.2 {
            out.push("work-extraction");
        }
        out
    }
}

/// Trial `index` of a law sweep: random Hamiltonians of widths in
/// `[0.3, 2]`, a random joint state and a Haar unitary, all drawn from the
/// trial's own stream so sweeps can be split across threads.
pub fn law_trial(seed: u64, index: u64, da: usize, db: usize) -> Result<LawTrial> {
    let mut rng = crate::random::trial_rng(seed, index);
    let fa = GibbsFamily::new(crate::random::random_hamiltonian(da, rng.random_range(0.3..2.0), &mut rng));
    let fb = GibbsFamily::new(crate::random::random_hamiltonian(db, rng.random_range(0.3..2.0), &mut rng));
    let record = random_process(&fa, &fb, None, &mut rng)?;
    Ok(LawTrial {
        index,
        ledger: work_ledger(&record)?,
        clausius: clausius_check(&record)?,
        extraction: work_extraction_check(&record)?,
        record,
    })
}
