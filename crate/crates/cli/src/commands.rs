use std::path::Path;

use isotherm::charges::{self, Normalisation};
use isotherm::diagram;
use isotherm::equilibrium::{self, Mode};
use isotherm::processes::{self, Bath};
use isotherm::resource::{self, PhiKind};
use isotherm::{energetics, Beta, DensityMatrix, Error};
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use crate::report::{Report, Value};
use crate::schema::{load_state, load_system, System};
use crate::{CliError, ModeArg};

type Outcome = Result<(String, u8), CliError>;

fn ok(r: &Report, json: bool) -> Outcome {
    Ok((r.render(json), 0))
}

fn parse_beta(s: &str, field: &str) -> Result<Beta, CliError> {
    match s {
        "inf" | "+inf" => Ok(Beta::PosInf),
        "-inf" => Ok(Beta::NegInf),
        _ => s
            .parse::<f64>()
            .map(Beta::from_f64)
            .map_err(|_| CliError::schema(format!("{field}: cannot parse '{s}' as a beta"))),
    }
}

pub fn info(system: &Path, state: &Path, json: bool) -> Outcome {
    let sys = load_system(system)?;
    let rho = load_state(state, &sys)?;
    let r = energetics::report(&rho, &sys.family()).map_err(|e| CliError::lib(state.display(), e))?;
    let mut out = Report::new();
    out.num("E", r.energy)
        .num("S", r.entropy)
        .push("beta", Value::Beta(r.intrinsic_beta))
        .push("beta_tilde", Value::Beta(r.spontaneous_beta))
        .num("B", r.bound_energy)
        .num("F", r.free_energy)
        .num("A", r.athermality);
    ok(&out, json)
}

pub fn boundary(
    system: &Path,
    states: &[String],
    points: usize,
    beta_min: &str,
    beta_max: &str,
    out: Option<&Path>,
) -> Outcome {
    let sys = load_system(system)?;
    let fam = sys.family();
    let mut labelled: Vec<(String, DensityMatrix)> = Vec::new();
    for s in states {
        let (label, file) = s
            .split_once('=')
            .ok_or_else(|| CliError::schema(format!("--state: expected LABEL=FILE, got '{s}'")))?;
        labelled.push((label.to_string(), load_state(Path::new(file), &sys)?));
    }
    let sample = diagram::sample_boundary(
        &fam,
        parse_beta(beta_min, "--beta-min")?,
        parse_beta(beta_max, "--beta-max")?,
        points,
    )
    .map_err(|e| CliError::lib("--points/--beta-min/--beta-max", e))?;
    let refs: Vec<(&str, &DensityMatrix)> = labelled.iter().map(|(l, r)| (l.as_str(), r)).collect();
    let csv = diagram::diagram_csv(&sample, &refs).map_err(|e| CliError::lib("diagram", e))?;
    match out {
        Some(path) => {
            std::fs::write(path, csv).map_err(|e| CliError::domain(format!("{}: {e}", path.display())))?;
            Ok((String::new(), 0))
        }
        None => Ok((csv, 0)),
    }
}

pub fn rate(system: &Path, from: &Path, to: &Path, json: bool) -> Outcome {
    let sys = load_system(system)?;
    let rho = load_state(from, &sys)?;
    let sigma = load_state(to, &sys)?;
    let sol = resource::conversion_rate(&rho, &sigma, &sys.family()).map_err(|e| CliError::lib("rate", e))?;
    let (kind, beta) = match sol.phi_kind {
        PhiKind::Pure => ("pure", None),
        PhiKind::Thermal(b) => ("thermal", Some(b)),
        PhiKind::SourceDegenerate => ("source-degenerate", None),
        PhiKind::Coincident => ("coincident", None),
    };
    let mut out = Report::new();
    out.num("r", sol.r)
        .num("phi_E", sol.phi_point.energy)
        .num("phi_S", sol.phi_point.entropy)
        .push("phi_kind", Value::Text(kind.into()));
    if let Some(b) = beta {
        out.push("phi_beta", Value::Beta(b));
    }
    out.num("collinearity_residual", sol.collinearity_residual);
    ok(&out, json)
}

pub fn equilibrate(systems: &[std::path::PathBuf], states: &[std::path::PathBuf], mode: ModeArg, json: bool) -> Outcome {
    if systems.len() != states.len() || systems.len() < 2 {
        return Err(CliError::schema(format!(
            "--system/--state: need matching pairs for at least two bodies, got {} and {}",
            systems.len(),
            states.len()
        )));
    }
    let loaded: Vec<System> = systems.iter().map(|p| load_system(p)).collect::<Result<_, _>>()?;
    let fams: Vec<_> = loaded.iter().map(System::family).collect();
    let rhos: Vec<DensityMatrix> = loaded
        .iter()
        .zip(states)
        .map(|(s, p)| load_state(p, s))
        .collect::<Result<_, _>>()?;
    let parts: Vec<_> = rhos.iter().zip(&fams).collect();
    let res = match mode {
        ModeArg::Entropy => equilibrium::equilibrate_isoentropic(&parts),
        ModeArg::Energy => equilibrium::equilibrate_isoenergetic(&parts),
    }
    .map_err(|e| CliError::lib("equilibrate", e))?;
    let mut out = Report::new();
    out.push(
        "mode",
        Value::Text(match res.mode {
            Mode::IsoEntropic => "entropy".into(),
            Mode::IsoEnergetic => "energy".into(),
        }),
    )
    .push("beta_joint", Value::Beta(res.beta_joint))
    .num("E_initial", res.initial_energy)
    .num("E_final", res.final_energy)
    .num("S_initial", res.initial_entropy)
    .num("S_final", res.final_entropy)
    .num("W", res.work_released)
    .num("entropy_produced", res.entropy_produced)
    .push("degenerate", Value::Flag(res.degenerate));
    ok(&out, json)
}

pub fn engine(cold: &Path, beta_cold: f64, hot: &Path, beta_hot: f64, copies: &[usize], json: bool) -> Outcome {
    if copies.is_empty() {
        return Err(CliError::schema("--copies: empty list"));
    }
    let fa = load_system(cold)?.family();
    let fb = load_system(hot)?.family();
    let head = processes::carnot_engine(
        Bath { family: &fa, beta: beta_cold, copies: 1 },
        Bath { family: &fb, beta: beta_hot, copies: 1 },
    )
    .map_err(|e| CliError::lib("engine", e))?;
    let table = processes::carnot_gap_table(&fa, beta_cold, &fb, beta_hot, copies)
        .map_err(|e| CliError::lib("engine", e))?;
    let rows = table
        .iter()
        .map(|(n, run)| {
            let mut r = Report::new();
            r.push("n", Value::Int(*n as u64))
                .num("W", run.work)
                .num("eta", run.efficiency)
                .num("bound_finite", run.bound_finite)
                .num("bound_carnot", run.bound_carnot)
                .num("gap", run.gap());
            r
        })
        .collect();
    let mut out = Report::new();
    out.num("W", head.work)
        .num("eta", head.efficiency)
        .num("bound_finite", head.bound_finite)
        .num("bound_carnot", head.bound_carnot)
        .num("beta_joint", head.beta_joint)
        .push("copies", Value::Rows(rows));
    ok(&out, json)
}

fn parse_dims(s: &str) -> Result<(usize, usize), CliError> {
    let bad = || CliError::schema(format!("--dims: expected AxB with A, B >= 2, got '{s}'"));
    let (a, b) = s.split_once(['x', 'X']).ok_or_else(bad)?;
    let (a, b) = (a.parse::<usize>().map_err(|_| bad())?, b.parse::<usize>().map_err(|_| bad())?);
    if a < 2 || b < 2 {
        return Err(bad());
    }
    Ok((a, b))
}

pub fn laws(trials: u64, seed: u64, dims: &str, threads: usize, json: bool) -> Outcome {
    let (da, db) = parse_dims(dims)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::domain(format!("--threads: {e}")))?;
    // indexed collect keeps trial order whatever the thread count
    let results: Vec<Result<processes::LawTrial, Error>> =
        pool.install(|| (0..trials).into_par_iter().map(|i| processes::law_trial(seed, i, da, db)).collect());
    let mut max_first = 0.0f64;
    let mut max_kp = 0.0f64;
    let mut failing = Vec::new();
    for r in results {
        let t = r.map_err(|e| CliError::lib("laws", e))?;
        max_first = max_first.max(t.ledger.first_law_residual().abs());
        max_kp = max_kp.max(t.ledger.kelvin_planck_residual().abs());
        let f = t.failures();
        if !f.is_empty() {
            failing.push((t, f));
        }
    }
    let mut out = Report::new();
    out.push("trials", Value::Int(trials))
        .push("seed", Value::Int(seed))
        .push("dims", Value::Text(format!("{da}x{db}")))
        .num("max_first_law_residual", max_first)
        .num("max_kelvin_planck_residual", max_kp)
        .push("failures", Value::Int(failing.len() as u64));
    if let Some((t, checks)) = failing.first() {
        let digest = hex::encode(Sha256::digest(t.record.describe().as_bytes()));
        out.push("first_failure", Value::Int(t.index))
            .push("failed_checks", Value::Text(checks.join(",")))
            .push("record_sha256", Value::Text(digest));
    }
    Ok((out.render(json), if failing.is_empty() { 0 } else { 1 }))
}

pub fn charges(system: &Path, state: &Path, mu: Option<&[f64]>, json: bool) -> Outcome {
    let sys = load_system(system)?;
    let rho = load_state(state, &sys)?;
    let fam = sys.gge_family()?;
    let lib = |field: &str| {
        let field = field.to_string();
        move |e: Error| CliError::lib(&field, e)
    };
    let l = fam.charges_of(&rho).map_err(lib("charges"))?;
    let mut out = Report::new();
    out.push("L", Value::Nums(l.clone())).num("S", rho.entropy());
    match fam.gge_solve(&l) {
        Ok(beta) => {
            let s_max = fam.stats(&beta).entropy();
            out.push("beta_vec", Value::Nums(beta)).num("A", s_max - rho.entropy());
        }
        Err(e @ (Error::Infeasible(_) | Error::SingularCovariance | Error::NotConverged(_))) => {
            // charges on the edge of the region: no finite multipliers
            out.push("beta_vec", Value::Text(format!("none ({e})")));
        }
        Err(e) => return Err(CliError::lib("gge", e)),
    }
    let mut rows = Vec::new();
    for k in 0..fam.q() {
        let b = charges::bound_charge(&rho, &fam, k).map_err(lib("bound_charge"))?;
        let mut r = Report::new();
        r.push("k", Value::Int(k as u64))
            .num("bound", b.value)
            .num("free", b.free)
            .push("scan", Value::Flag(b.flagged));
        rows.push(r);
    }
    out.push("bound_charges", Value::Rows(rows));
    if let Some(mu) = mu {
        let p = charges::bound_potential(&rho, &fam, mu, Normalisation::FirstUnit)
            .or_else(|_| charges::bound_potential(&rho, &fam, mu, Normalisation::Euclidean))
            .map_err(lib("--mu"))?;
        out.push("mu", Value::Nums(p.mu))
            .num("V", p.potential)
            .num("V_bound", p.bound)
            .num("V_free", p.free);
    }
    ok(&out, json)
}
