//! The `thermoctl` command line.

pub mod commands;
pub mod csv_io;
pub mod spec;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use self::spec::{ProblemSpec, SpecError};

#[derive(Debug, Parser)]
#[command(name = "thermoctl", version, about = "Minimal-time bang-bang control of the 1-D heat equation")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Bisection tolerance on the optimal time.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Seed for the randomized sphere starts.
    #[arg(long, global = true, env = "THERMOCTL_SEED")]
    pub seed: Option<u64>,
    /// Threshold for the structural checks.
    #[arg(long, global = true)]
    pub delta: Option<f64>,
    /// Largest horizon tried before reporting infeasibility.
    #[arg(long, global = true)]
    pub horizon_cap: Option<f64>,
    /// Directory for output files.
    #[arg(long, global = true)]
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify existence and report the structural conditions.
    Check { spec: PathBuf },
    /// Compute the minimal time and a bang-bang control.
    Solve {
        spec: PathBuf,
        /// Also run the piecewise-constant brute-force comparison.
        #[arg(long)]
        oracle: bool,
    },
    /// Scan single-interval regions for generic configurations.
    Scan { spec: PathBuf },
    /// Solve on the full domain and on the given region side by side.
    Compare { spec: PathBuf },
}

/// Values from the command line that take precedence over the spec.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub tol: Option<f64>,
    pub seed: Option<u64>,
    pub delta: Option<f64>,
    pub horizon_cap: Option<f64>,
    pub out_dir: Option<PathBuf>,
}

#[derive(Debug)]
pub enum CommandError {
    Spec(SpecError),
    Runtime(anyhow::Error),
    /// No minimal-time control exists; carries the witness.
    Nonexistent(String),
    /// The scan found no admissible or generic point.
    NoCandidate(String),
}

impl CommandError {
    pub fn exit_code(&self) -> u8 {
        match self {
            Self::Runtime(_) => 1,
            Self::Spec(_) => 2,
            Self::Nonexistent(_) => 3,
            Self::NoCandidate(_) => 4,
        }
    }
}

impl std::fmt::Display for CommandError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Self::Spec(e) => write!(f, "{e}"),
            Self::Runtime(e) => write!(f, "{e:#}"),
            Self::Nonexistent(w) => write!(f, "NONEXISTENT: {w}"),
            Self::NoCandidate(s) => write!(f, "no candidate: {s}"),
        }
    }
}

impl From<SpecError> for CommandError {
    fn from(e: SpecError) -> Self {
        Self::Spec(e)
    }
}

impl From<anyhow::Error> for CommandError {
    fn from(e: anyhow::Error) -> Self {
        Self::Runtime(e)
    }
}

pub fn execute(cli: &Cli) -> Result<String, CommandError> {
    let ov = Overrides {
        tol: cli.tol,
        seed: cli.seed,
        delta: cli.delta,
        horizon_cap: cli.horizon_cap,
        out_dir: cli.out_dir.clone(),
    };
    match &cli.command {
        Command::Check { spec } => commands::cmd_check(&ProblemSpec::load(spec)?, &ov),
        Command::Solve { spec, oracle } => commands::cmd_solve(&ProblemSpec::load(spec)?, &ov, *oracle),
        Command::Scan { spec } => commands::cmd_scan(&ProblemSpec::load(spec)?, &ov),
        Command::Compare { spec } => commands::cmd_compare(&ProblemSpec::load(spec)?, &ov),
    }
}

pub fn run() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            // ignore a closed pipe
            let _ = writeln!(out, "{text}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("thermoctl: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
