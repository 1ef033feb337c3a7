//! `polybubble` command-line driver.
//!
//! Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config error,
//! 3 a reduced solve did not converge.

mod commands;
mod config;
mod report;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::report::{Provenance, Report};

#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numeric(polybubble::Error),
    Io(std::io::Error),
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(s) => write!(f, "config error: {s}"),
            CliError::Numeric(e) => write!(f, "{e}"),
            CliError::Io(e) => write!(f, "i/o error: {e}"),
        }
    }
}

impl From<polybubble::Error> for CliError {
    fn from(e: polybubble::Error) -> Self {
        match e {
            polybubble::Error::InvalidParams(s) => CliError::Config(s),
            other => CliError::Numeric(other),
        }
    }
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) | CliError::Io(_) => 2,
            CliError::Numeric(_) => 1,
        }
    }
}

#[derive(Debug, Parser)]
#[command(name = "polybubble", version, about = "Verification suites for doubled-circle polyharmonic multi-bubbles")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Run configuration (flat `key = value` file).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides `out` in the config; default `out`).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Seed (overrides `seed` in the config).
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads.
    #[arg(long, global = true)]
    jobs: Option<usize>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Prefactor, integrals, B1-B4 and A1/A2 with dual-path deltas.
    Constants,
    /// Exact against asymptotic lattice sums over the k sweep.
    Lattice,
    /// Weighted norm of E_k across the (k, lambda) cells and its slope.
    ResidualScan,
    /// Reduced-system solve across the k sweep.
    Solve,
    /// Pohozaev ratio, boundary locality and weighted mass.
    Pohozaev,
    /// Corrector norms, nonlinear estimate and annulus mass.
    Norms,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Constants => "constants",
            Command::Lattice => "lattice",
            Command::ResidualScan => "residual-scan",
            Command::Solve => "solve",
            Command::Pohozaev => "pohozaev",
            Command::Norms => "norms",
        }
    }
}

fn run(cli: Cli) -> Result<Report, CliError> {
    let path = cli.config.ok_or_else(|| CliError::Config("--config PATH is required".into()))?;
    let text = std::fs::read_to_string(&path).map_err(CliError::Io)?;
    let mut cfg = RunConfig::parse(&text)?;
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Config("--jobs must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Config(e.to_string()))?;
    }
    let mut rep = Report::new(cli.command.name(), Provenance::new(&text, cfg.seed));
    match cli.command {
        Command::Constants => commands::constants(&cfg, &mut rep)?,
        Command::Lattice => commands::lattice(&cfg, &mut rep)?,
        Command::ResidualScan => commands::residual_scan(&cfg, &mut rep)?,
        Command::Solve => commands::solve(&cfg, &mut rep)?,
        Command::Pohozaev => commands::pohozaev(&cfg, &mut rep)?,
        Command::Norms => commands::norms(&cfg, &mut rep)?,
    }
    let out = cli.out.or_else(|| cfg.out.as_ref().map(PathBuf::from)).unwrap_or_else(|| PathBuf::from("out"));
    rep.write(&out).map_err(CliError::Io)?;
    Ok(rep)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(rep) => {
            print!("{}", rep.summary());
            if rep.nonconverged {
                eprintln!("reduced solve did not converge");
                ExitCode::from(3)
            } else if rep.all_pass() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
