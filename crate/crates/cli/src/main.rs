mod commands;
mod io;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use catent::entropy::{EntropyMeasure, LogBase};
use catent::maxent::{DEFAULT_RESOLUTION, DEFAULT_TOL};
use catent::Tolerances;
use clap::{Args, Parser, Subcommand, ValueEnum};

use commands::{Globals, Outcome, PrincipleCheck, TransitionArgs, TransitionMode};

#[derive(Debug, Parser)]
#[command(name = "catent", version, about = "Entropy principles, max-entropy estimation, compression and state transitions")]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct GlobalArgs {
    /// Entropy measure: vn, renyi:ALPHA or tsallis:Q.
    #[arg(long, global = true, default_value = "vn")]
    measure: EntropyMeasure,
    /// Number of sampled bases.
    #[arg(long, global = true, default_value_t = 500)]
    samples: usize,
    /// Seed for every random draw.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Uniform validation tolerance.
    #[arg(long, global = true, env = "CE_TOL")]
    tol: Option<f64>,
    /// Logarithm base: 2 or e.
    #[arg(long, global = true, default_value = "2")]
    base: LogBase,
    /// Output format; CSV is available for tabular reports.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Entropy of a density matrix.
    Entropy {
        /// Density matrix JSON file.
        matrix: PathBuf,
    },
    /// Dephase a density matrix in a basis (columns of the basis matrix).
    Dephase {
        /// Density matrix JSON file.
        matrix: PathBuf,
        /// Unitary whose columns are the basis vectors.
        basis: PathBuf,
    },
    /// Sample bases and check the dephasing entropy principles.
    VerifyPrinciples {
        matrix: PathBuf,
        /// Single-system dephasing or purification product-basis checks.
        #[arg(long, value_enum, default_value_t = PrincipleCheck::Local)]
        check: PrincipleCheck,
    },
    /// Maximum-entropy latent spectrum from dephased observations.
    Maxent {
        /// JSON object with observed distribution `q` and overlaps `alpha` (rows: latent index).
        problem: PathBuf,
        /// Also run the brute-force oracle and report the objective gap.
        #[arg(long)]
        oracle: bool,
        /// Solve the relaxed single-constraint problem.
        #[arg(long)]
        relaxed: bool,
        /// Grid steps per unit for the brute-force oracle.
        #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
        resolution: usize,
    },
    /// Construct and verify a state transition unitary.
    Transition {
        /// Source density matrix (approx mode also takes a spectrum stream).
        source: PathBuf,
        /// Target density matrix (approx mode also takes a spectrum stream).
        target: PathBuf,
        #[arg(long, value_enum, default_value_t = TransitionMode::Noisy)]
        mode: TransitionMode,
        /// Dephasing basis for catalytic mode.
        #[arg(long)]
        basis: Option<PathBuf>,
        /// Error budget for approx mode.
        #[arg(long, default_value_t = 0.01)]
        epsilon: f64,
        /// Search for a catalyst of this dimension.
        #[arg(long)]
        catalyst_dim: Option<usize>,
        /// Iteration budget of the catalyst search.
        #[arg(long, default_value_t = 2000)]
        budget: usize,
        /// Padding levels for probabilistic mode.
        #[arg(long)]
        padding: Option<usize>,
        /// Include the global unitary in the report.
        #[arg(long)]
        emit_unitary: bool,
    },
    /// Typical-subspace fidelity over block lengths and rates.
    Compress {
        /// Density matrix JSON file.
        matrix: PathBuf,
        /// Basis to dephase in first (default: computational).
        basis: Option<PathBuf>,
        /// Block lengths, comma separated.
        #[arg(long = "n", required = true, num_args = 1.., value_delimiter = ',')]
        n: Vec<usize>,
        /// Rates in bits per symbol, comma separated.
        #[arg(long = "rate", required = true, num_args = 1.., value_delimiter = ',')]
        rate: Vec<f64>,
    },
    /// Entropies of a chain of bipartite pure links.
    NetworkChain {
        /// JSON array of Schmidt probability vectors, one per link.
        links: PathBuf,
    },
    /// Physical models.
    Models {
        #[command(subcommand)]
        model: Model,
    },
}

#[derive(Debug, Subcommand)]
enum Model {
    /// Truncated thermal state entropies.
    Thermal {
        /// Mean occupation number.
        #[arg(long)]
        nbar: f64,
        /// Truncation levels, comma separated.
        #[arg(long = "N-list", alias = "n-list", required = true, num_args = 1.., value_delimiter = ',')]
        n_list: Vec<usize>,
    },
    /// Beamsplitter mixing of a one-mode covariance matrix with vacuum.
    Gaussian {
        /// 2x2 covariance matrix JSON (vacuum is the identity).
        #[arg(long)]
        cov: PathBuf,
        /// Transmissivities, comma separated.
        #[arg(long = "lambda", required = true, num_args = 1.., value_delimiter = ',')]
        lambda: Vec<f64>,
    },
    /// Center-cluster spin model.
    Spin {
        /// Couplings as an m x n nested array (center spins x bath spins).
        #[arg(long)]
        omega: PathBuf,
        /// Expected number of center spins; checked against the coupling array.
        #[arg(long)]
        m: Option<usize>,
        /// Expected number of bath spins; checked against the coupling array.
        #[arg(long)]
        n: Option<usize>,
        /// Evolution times, comma separated.
        #[arg(long = "T-list", alias = "t-list", required = true, num_args = 1.., value_delimiter = ',')]
        t_list: Vec<f64>,
        /// Dephasing basis for the center cluster (default: computational).
        #[arg(long)]
        basis: Option<PathBuf>,
    },
}

fn run(cli: &Cli) -> Result<Outcome> {
    let g = &cli.global;
    let tol = match g.tol {
        Some(t) if t.is_finite() && t > 0.0 => Tolerances::uniform(t),
        Some(t) => anyhow::bail!("tolerance must be positive, got {t}"),
        None => Tolerances::default(),
    };
    let globals = Globals {
        measure: g.measure.clone(),
        samples: g.samples,
        seed: g.seed,
        solver_tol: g.tol.unwrap_or(DEFAULT_TOL),
        tol,
        base: g.base,
    };
    match &cli.command {
        Command::Entropy { matrix } => commands::entropy(&globals, matrix),
        Command::Dephase { matrix, basis } => commands::dephase(&globals, matrix, basis),
        Command::VerifyPrinciples { matrix, check } => commands::verify_principles(&globals, matrix, *check),
        Command::Maxent {
            problem,
            oracle,
            relaxed,
            resolution,
        } => commands::maxent(&globals, problem, *oracle, *relaxed, *resolution),
        Command::Transition {
            source,
            target,
            mode,
            basis,
            epsilon,
            catalyst_dim,
            budget,
            padding,
            emit_unitary,
        } => commands::transition(
            &globals,
            &TransitionArgs {
                source: source.clone(),
                target: target.clone(),
                mode: *mode,
                basis: basis.clone(),
                epsilon: *epsilon,
                catalyst_dim: *catalyst_dim,
                budget: *budget,
                padding: *padding,
                emit_unitary: *emit_unitary,
            },
        ),
        Command::Compress { matrix, basis, n, rate } => commands::compress(&globals, matrix, basis.as_deref(), n, rate),
        Command::NetworkChain { links } => commands::network_chain(&globals, links),
        Command::Models { model } => match model {
            Model::Thermal { nbar, n_list } => commands::models_thermal(&globals, *nbar, n_list),
            Model::Gaussian { cov, lambda } => commands::models_gaussian(cov, lambda),
            Model::Spin {
                omega,
                m,
                n,
                t_list,
                basis,
            } => commands::models_spin(&globals, omega, *m, *n, t_list, basis.as_deref()),
        },
    }
}

fn render(outcome: &Outcome, format: Format) -> Result<Vec<u8>> {
    match format {
        Format::Json => io::to_json_bytes(&outcome.json),
        Format::Csv => {
            let table = match &outcome.table {
                Some(t) => t.clone(),
                None => io::Table::from_flat(&outcome.json).context("this report has no CSV form; use --format json")?,
            };
            io::to_csv_bytes(&table)
        }
    }
}

/// Residual or verification failures exit with 1; everything else is an input error.
fn exit_code_for(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<catent::Error>() {
        Some(catent::Error::VerificationFailed { .. } | catent::Error::OracleInvalid(_)) => 1,
        _ => 2,
    }
}

fn execute(cli: &Cli) -> Result<(Vec<u8>, bool)> {
    let outcome = run(cli)?;
    let bytes = render(&outcome, cli.global.format)?;
    Ok((bytes, outcome.passed))
}

fn usage_exit_code(e: &clap::Error) -> u8 {
    if e.use_stderr() {
        2
    } else {
        0
    }
}

fn finish(cli: &Cli) -> u8 {
    let result = execute(cli).and_then(|(bytes, passed)| {
        io::emit(&bytes, cli.global.out.as_deref())?;
        Ok(passed)
    });
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code_for(&e)
        }
    }
}

fn main() -> ExitCode {
    match Cli::try_parse() {
        Ok(cli) => ExitCode::from(finish(&cli)),
        Err(e) => {
            let _ = e.print();
            ExitCode::from(usage_exit_code(&e))
        }
    }
}
