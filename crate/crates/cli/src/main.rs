//! `isotherm`: thermodynamic labels, diagrams, rates and law sweeps from the
//! command line.
//!
//! Exit codes: 0 ok, 1 a law check failed, 2 malformed input, 3 input
//! outside the numeric domain, 4 degenerate construction.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use isotherm::{Error, ErrorKind};

mod commands;
mod report;
mod schema;

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn schema(message: impl Into<String>) -> Self {
        CliError {
            code: 2,
            message: message.into(),
        }
    }

    pub fn domain(message: impl Into<String>) -> Self {
        CliError {
            code: 3,
            message: message.into(),
        }
    }

    /// A library error attributed to `field`.
    pub fn lib(field: impl std::fmt::Display, e: Error) -> Self {
        let code = match e.kind() {
            ErrorKind::Schema => 2,
            ErrorKind::Domain => 3,
            ErrorKind::Degenerate => 4,
        };
        CliError {
            code,
            message: format!("{field}: {e}"),
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "isotherm", version, about = "Temperature-independent quantum thermodynamics")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Entropy,
    Energy,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// E, S, intrinsic and spontaneous beta, B, F and A of a state.
    Info {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Thermal boundary (and labelled states) as CSV.
    Boundary {
        #[arg(long)]
        system: PathBuf,
        /// `LABEL=FILE`, repeatable.
        #[arg(long = "state")]
        states: Vec<String>,
        #[arg(long, default_value_t = isotherm::diagram::DEFAULT_POINTS)]
        points: usize,
        #[arg(long, default_value = "-inf", allow_hyphen_values = true)]
        beta_min: String,
        #[arg(long, default_value = "inf", allow_hyphen_values = true)]
        beta_max: String,
        /// Output file; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Asymptotic rate of turning `from` into `to`.
    Rate {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        from: PathBuf,
        #[arg(long)]
        to: PathBuf,
        #[arg(long)]
        json: bool,
    },
    /// Equilibrate uncorrelated bodies; pass `--system` and `--state` once
    /// per body, in order.
    Equilibrate {
        #[arg(long = "system", required = true)]
        systems: Vec<PathBuf>,
        #[arg(long = "state", required = true)]
        states: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "entropy")]
        mode: ModeArg,
        #[arg(long)]
        json: bool,
    },
    /// One stroke of a finite-bath engine between a cold and a hot bath.
    Engine {
        #[arg(long)]
        cold: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        beta_cold: f64,
        #[arg(long)]
        hot: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        beta_hot: f64,
        #[arg(long, value_delimiter = ',', default_value = "1,2,4,8")]
        copies: Vec<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Random-process sweep of the first and second laws.
    Laws {
        #[arg(long, default_value_t = 1000)]
        trials: u64,
        #[arg(long, env = "ISOTHERM_SEED", default_value_t = 0)]
        seed: u64,
        /// Subsystem dimensions, `AxB`.
        #[arg(long, default_value = "2x2")]
        dims: String,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        #[arg(long)]
        json: bool,
    },
    /// Multi-charge labels: charges, GGE multipliers, athermality, bound
    /// charges and an optional generalised potential.
    Charges {
        #[arg(long)]
        system: PathBuf,
        #[arg(long)]
        state: PathBuf,
        /// Potential weights, comma separated, one per charge.
        #[arg(long, value_delimiter = ',')]
        mu: Option<Vec<f64>>,
        #[arg(long)]
        json: bool,
    },
}

fn run(cli: Cli) -> Result<(String, u8), CliError> {
    use commands::*;
    match cli.command {
        Command::Info { system, state, json } => info(&system, &state, json),
        Command::Boundary {
            system,
            states,
            points,
            beta_min,
            beta_max,
            out,
        } => boundary(&system, &states, points, &beta_min, &beta_max, out.as_deref()),
        Command::Rate { system, from, to, json } => rate(&system, &from, &to, json),
        Command::Equilibrate {
            systems,
            states,
            mode,
            json,
        } => equilibrate(&systems, &states, mode, json),
        Command::Engine {
            cold,
            beta_cold,
            hot,
            beta_hot,
            copies,
            json,
        } => engine(&cold, beta_cold, &hot, beta_hot, &copies, json),
        Command::Laws {
            trials,
            seed,
            dims,
            threads,
            json,
        } => laws(trials, seed, &dims, threads, json),
        Command::Charges { system, state, mu, json } => charges(&system, &state, mu.as_deref(), json),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok((out, code)) => {
            print!("{out}");
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
