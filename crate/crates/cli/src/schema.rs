//! JSON input files.
//!
//! ```json
//! {"dim": 2, "hamiltonian": {"diagonal": [0, 1]}}
//! {"dim": 2, "hamiltonian": {"matrix": {"re": [[0, 0.5], [0.5, 1]], "im": [[0, 0], [0, 0]]}},
//!  "charges": [{"diagonal": [1, -1]}]}
//! {"diagonal": [0.1, 0.9]}
//! {"gibbs": {"beta": 2.0}}        // or "inf" / "-inf"
//! {"gge": {"beta_vec": [0.5, -0.2]}}
//! ```
//!
//! The Hamiltonian is always the first charge; `charges` lists the others.

use std::path::Path;

use isotherm::charges::GgeFamily;
use isotherm::operators::CMatrix;
use isotherm::{Beta, DensityMatrix, GibbsFamily, HermitianOperator};
use num_complex::Complex64;
use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MatrixSpec {
    pub re: Vec<Vec<f64>>,
    #[serde(default)]
    pub im: Option<Vec<Vec<f64>>>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum OperatorSpec {
    Diagonal(Vec<f64>),
    Matrix(MatrixSpec),
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SystemSpec {
    pub dim: usize,
    pub hamiltonian: OperatorSpec,
    #[serde(default)]
    pub charges: Vec<OperatorSpec>,
}

#[derive(Debug, Clone, Copy, Deserialize)]
#[serde(untagged)]
pub enum BetaSpec {
    Number(f64),
    Sentinel(Sentinel),
}

#[derive(Debug, Clone, Copy, Deserialize)]
pub enum Sentinel {
    #[serde(rename = "inf")]
    PosInf,
    #[serde(rename = "-inf")]
    NegInf,
}

impl BetaSpec {
    pub fn beta(self) -> Beta {
        match self {
            BetaSpec::Number(x) => Beta::from_f64(x),
            BetaSpec::Sentinel(Sentinel::PosInf) => Beta::PosInf,
            BetaSpec::Sentinel(Sentinel::NegInf) => Beta::NegInf,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GibbsSpec {
    pub beta: BetaSpec,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GgeSpec {
    pub beta_vec: Vec<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(rename_all = "lowercase", deny_unknown_fields)]
pub enum StateSpec {
    Diagonal(Vec<f64>),
    Matrix(MatrixSpec),
    Gibbs(GibbsSpec),
    Gge(GgeSpec),
}

/// A parsed system file.
#[derive(Debug, Clone)]
pub struct System {
    pub name: String,
    pub hamiltonian: HermitianOperator,
    pub charges: Vec<HermitianOperator>,
}

impl System {
    pub fn dim(&self) -> usize {
        self.hamiltonian.dim()
    }

    pub fn family(&self) -> GibbsFamily {
        GibbsFamily::new(self.hamiltonian.clone())
    }

    /// `H` followed by the extra charges.
    pub fn gge_family(&self) -> Result<GgeFamily, CliError> {
        let mut all = vec![self.hamiltonian.clone()];
        all.extend(self.charges.iter().cloned());
        GgeFamily::from_charges(all).map_err(|e| CliError::lib(format!("{}.charges", self.name), e))
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::schema(format!("{}: {e}", path.display())))?;
    serde_json::from_str(&text).map_err(|e| CliError::schema(format!("{}: {e}", path.display())))
}

fn matrix(m: &MatrixSpec, field: &str) -> Result<CMatrix, CliError> {
    let n = m.re.len();
    if n == 0 {
        return Err(CliError::schema(format!("{field}.re: empty matrix")));
    }
    let zeros;
    let im = match &m.im {
        Some(im) => im,
        None => {
            zeros = vec![vec![0.0; n]; n];
            &zeros
        }
    };
    if im.len() != n {
        return Err(CliError::schema(format!("{field}.im: {} rows, expected {n}", im.len())));
    }
    let mut out = CMatrix::zeros(n, n);
    for (i, (r, c)) in m.re.iter().zip(im).enumerate() {
        if r.len() != n || c.len() != n {
            return Err(CliError::schema(format!("{field}: row {i} does not have {n} entries")));
        }
        for j in 0..n {
            out[(i, j)] = Complex64::new(r[j], c[j]);
        }
    }
    Ok(out)
}

fn operator(spec: &OperatorSpec, dim: usize, field: &str) -> Result<HermitianOperator, CliError> {
    let op = match spec {
        OperatorSpec::Diagonal(d) => HermitianOperator::from_diagonal(d),
        OperatorSpec::Matrix(m) => HermitianOperator::new(matrix(m, &format!("{field}.matrix"))?),
    }
    .map_err(|e| CliError::lib(field, e))?;
    if op.dim() != dim {
        return Err(CliError::schema(format!("{field}: dimension {} but dim = {dim}", op.dim())));
    }
    Ok(op)
}

pub fn load_system(path: &Path) -> Result<System, CliError> {
    let spec: SystemSpec = read_json(path)?;
    let name = path.display().to_string();
    let hamiltonian = operator(&spec.hamiltonian, spec.dim, &format!("{name}: hamiltonian"))?;
    let charges = spec
        .charges
        .iter()
        .enumerate()
        .map(|(k, c)| operator(c, spec.dim, &format!("{name}: charges[{k}]")))
        .collect::<Result<Vec<_>, _>>()?;
    let system = System {
        name,
        hamiltonian,
        charges,
    };
    if !system.charges.is_empty() {
        system.gge_family()?;
    }
    Ok(system)
}

pub fn load_state(path: &Path, system: &System) -> Result<DensityMatrix, CliError> {
    let spec: StateSpec = read_json(path)?;
    let name = path.display();
    let rho = match &spec {
        StateSpec::Diagonal(p) => {
            DensityMatrix::from_diagonal(p).map_err(|e| CliError::lib(format!("{name}: diagonal"), e))?
        }
        StateSpec::Matrix(m) => DensityMatrix::new(matrix(m, &format!("{name}: matrix"))?)
            .map_err(|e| CliError::lib(format!("{name}: matrix"), e))?,
        StateSpec::Gibbs(g) => system.family().gibbs_state(g.beta.beta()),
        StateSpec::Gge(g) => {
            if system.charges.is_empty() {
                return Err(CliError::schema(format!(
                    "{name}: gge state needs a system with charges"
                )));
            }
            system
                .gge_family()?
                .gge_state(&g.beta_vec)
                .map_err(|e| CliError::lib(format!("{name}: gge.beta_vec"), e))?
        }
    };
    if rho.dim() != system.dim() {
        return Err(CliError::schema(format!(
            "{name}: state dimension {} but system dim = {}",
            rho.dim(),
            system.dim()
        )));
    }
    Ok(rho)
}
