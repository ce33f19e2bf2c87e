//! Batch front end: seven subcommands over the interchange formats.
//!
//! Every command is a pure function of (configuration, input files, seed):
//! repeated runs produce bit-identical files and stdout. Output files are
//! staged to temporaries and renamed only after every byte is ready, so an
//! error never leaves a partial file behind.
//!
//! Exit codes: 0 success, 2 malformed input (files, flags, configuration),
//! 3 infeasible configuration, 4 numerical non-convergence.

mod commands;
mod config;

use std::path::PathBuf;

use clap::{Parser, Subcommand, ValueEnum};

/// Classified failure; the variant fixes the process exit code.
#[derive(Debug)]
pub enum CliError {
    /// Missing or malformed input: files, flags, configuration. Exit 2.
    Input(String),
    /// Well-formed but mathematically unsatisfiable request. Exit 3.
    Infeasible(String),
    /// A numerical process failed to converge or was refused. Exit 4.
    NumericalFailure(String),
}

impl CliError {
    pub fn code(&self) -> i32 {
        match self {
            CliError::Input(_) => 2,
            CliError::Infeasible(_) => 3,
            CliError::NumericalFailure(_) => 4,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Input(m) | CliError::Infeasible(m) | CliError::NumericalFailure(m) => {
                f.write_str(m)
            }
        }
    }
}

impl From<waveletspace::error::Error> for CliError {
    fn from(e: waveletspace::error::Error) -> Self {
        use waveletspace::error::Error;
        match e {
            Error::Invalid(_) => CliError::Input(e.to_string()),
            Error::Infeasible(_) => CliError::Infeasible(e.to_string()),
            Error::NotContractive { .. } | Error::NoConvergence { .. } => {
                CliError::NumericalFailure(e.to_string())
            }
        }
    }
}

#[derive(Parser)]
#[command(
    name = "waveletspace",
    version,
    about = "Wavelet transforms, cube-supremum norms, product/atom decompositions, \
             the extremal-set experiment, and the fixed-point solver"
)]
pub struct Cli {
    /// JSON run configuration (see README for the schema).
    #[arg(long, global = true, value_name = "JSON")]
    config: Option<PathBuf>,

    /// Overrides the seed stored in the configuration.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Directory receiving output files (created if absent).
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
pub enum Command {
    /// Analyze a grid file into coefficients (or synthesize back with
    /// --inverse).
    Transform {
        /// Input file: WGF1 grid (WCF1 coefficients with --inverse).
        #[arg(long)]
        input: PathBuf,
        /// Output file: WCF1 coefficients (WGF1 grid with --inverse).
        #[arg(long)]
        output: PathBuf,
        /// Synthesize a grid from coefficients instead of analyzing.
        #[arg(long)]
        inverse: bool,
    },
    /// Print a norm report of a coefficient file as JSON on stdout.
    Norm {
        /// Input WCF1 coefficient file.
        #[arg(long)]
        input: PathBuf,
        /// Which functional to evaluate.
        #[arg(long, value_enum)]
        which: NormKind,
    },
    /// Run the nested-construction divergence experiment; writes
    /// divergence.csv and provenance.json into --out.
    Counterexample,
    /// Solve (I + (-Δ)^{r/2} + V) f = g by Neumann iteration; writes
    /// solution.wgf1 and solve_report.json into --out, echoing the report
    /// on stdout.
    Solve {
        /// Potential V as a WGF1 grid file.
        #[arg(long)]
        potential: PathBuf,
        /// Right-hand side g as a WGF1 grid file.
        #[arg(long)]
        rhs: PathBuf,
        /// Auxiliary smoothness (defaults: solver block, then params.t).
        #[arg(long)]
        t: Option<f64>,
        /// Primary smoothness (defaults: solver block, then params.r).
        #[arg(long)]
        r: Option<f64>,
        /// Relative residual target (defaults: solver block, then 1e-9).
        #[arg(long)]
        tol: Option<f64>,
        /// Iteration budget (defaults: solver block, then 200).
        #[arg(long)]
        max_iter: Option<usize>,
    },
    /// Split a pointwise product into paraproduct terms; writes one WCF1
    /// per term plus manifest.json into --out.
    Decompose {
        /// First factor as a WGF1 grid file.
        #[arg(long)]
        f: PathBuf,
        /// Second factor as a WGF1 grid file.
        #[arg(long)]
        g: PathBuf,
        /// Base projection level N (term sums run over N <= j < J).
        #[arg(long, default_value_t = 3)]
        shift: u32,
    },
    /// Split a coefficient file into combination atoms; writes one WCF1
    /// per atom plus atoms_manifest.json into --out.
    Atoms {
        /// Input WCF1 coefficient file.
        #[arg(long)]
        input: PathBuf,
        /// Re-assemble the atoms and print whether they reproduce the
        /// input exactly.
        #[arg(long)]
        check: bool,
    },
    /// Merge CSV tables from repeated runs into one plot-ready CSV with a
    /// run_id column; writes merged.csv into --out.
    Report {
        /// Input CSV files sharing one header; each file's stem becomes
        /// its run_id.
        #[arg(required = true)]
        inputs: Vec<PathBuf>,
    },
}

/// Functional selector for the `norm` subcommand.
#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum NormKind {
    /// Square-function Sobolev norm at smoothness r.
    Sobolev,
    /// Cube-supremum Morrey norm.
    Morrey,
    /// Morrey norm with the logarithmic cube weight.
    Logmorrey,
    /// Oscillation-type seminorm (scaling block invisible).
    Bmo,
    /// Largest weighted coefficient magnitude.
    Envelope,
}

fn main() {
    let cli = Cli::parse();
    if let Err(e) = commands::run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.code());
    }
}
