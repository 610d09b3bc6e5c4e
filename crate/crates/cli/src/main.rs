mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

/// Hankel-norm model reduction of descriptor systems.
#[derive(Debug, Parser)]
#[command(name = "hankelred", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write a benchmark system as a manifest plus Matrix Market files.
    Generate(GenerateArgs),
    /// Proper and improper Hankel singular values as CSV.
    Hsv(HsvArgs),
    /// Reduce a system and write the reduced manifest and a report.
    Reduce(ReduceArgs),
    /// Sampled frequency-response error between two systems as CSV.
    Error(ErrorArgs),
    /// All-pass certificate of a square system.
    Verify(VerifyArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Msd,
    Stokes,
    Random,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    pub family: Family,
    /// Number of masses (msd).
    #[arg(long, default_value_t = 30)]
    pub g: usize,
    #[arg(long, default_value_t = 100.0)]
    pub mass: f64,
    #[arg(long, default_value_t = 2.0)]
    pub stiffness: f64,
    #[arg(long, default_value_t = 5.0)]
    pub damping: f64,
    /// Velocity unknowns (stokes).
    #[arg(long, default_value_t = 200)]
    pub n_v: usize,
    /// Pressure unknowns (stokes).
    #[arg(long, default_value_t = 50)]
    pub n_p: usize,
    /// State dimension (random).
    #[arg(long, default_value_t = 30)]
    pub n: usize,
    /// Inputs (random).
    #[arg(long, default_value_t = 1)]
    pub m: usize,
    /// Outputs (random).
    #[arg(long, default_value_t = 1)]
    pub p: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct HsvArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Ghna,
    Gbt,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum UChoiceArg {
    Unitary,
    Pinv,
}

#[derive(Debug, Args)]
pub struct ReduceArgs {
    pub manifest: PathBuf,
    #[arg(long, value_enum, default_value_t = Method::Ghna)]
    pub method: Method,
    /// Retained proper order.
    #[arg(long, conflicts_with = "tol", required_unless_present = "tol")]
    pub order: Option<usize>,
    /// Retain proper HSVs above this value.
    #[arg(long)]
    pub tol: Option<f64>,
    /// Approximate mode: a balancing tolerance, or `auto`.
    #[arg(long)]
    pub approx: Option<String>,
    /// Relative tolerance for grouping equal HSVs.
    #[arg(long, default_value_t = 1e-10)]
    pub cluster_tol: f64,
    #[arg(long, value_enum, default_value_t = UChoiceArg::Unitary)]
    pub u_choice: UChoiceArg,
    /// Replace a purely static fast part by a feed-through term.
    #[arg(long)]
    pub fold_static_fast: bool,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct ErrorArgs {
    pub full: PathBuf,
    pub reduced: PathBuf,
    #[arg(long, default_value_t = 1e-4)]
    pub wmin: f64,
    #[arg(long, default_value_t = 1e4)]
    pub wmax: f64,
    #[arg(long, default_value_t = 200)]
    pub points: usize,
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    pub manifest: PathBuf,
    #[arg(long)]
    pub sigma: f64,
    /// Pass threshold for every residual.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
}

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error("{name}: {0}", name = .0.name())]
    Numerical(#[from] hankelred::Error),
    #[error("io: {0}")]
    Io(String),
    #[error("format: {0}")]
    Format(String),
    #[error("usage: {0}")]
    Usage(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            // bad parameters are usage errors, not numerical failures
            CliError::Numerical(hankelred::Error::InvalidInput(_)) => 2,
            CliError::Numerical(_) => 1,
            _ => 2,
        }
    }
}

fn configure_threads() -> Result<usize, CliError> {
    let Ok(v) = std::env::var("HANKELRED_THREADS") else {
        return Ok(rayon::current_num_threads());
    };
    let k: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|&k| k > 0)
        .ok_or_else(|| CliError::Usage(format!("HANKELRED_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(k)
        .build_global()
        .map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(k)
}

fn run(cli: Cli) -> Result<(), CliError> {
    let threads = configure_threads()?;
    match cli.command {
        Command::Generate(a) => commands::generate(&a, threads),
        Command::Hsv(a) => commands::hsv(&a, threads),
        Command::Reduce(a) => commands::reduce(&a, threads),
        Command::Error(a) => commands::error(&a, threads),
        Command::Verify(a) => commands::verify(&a, threads),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
