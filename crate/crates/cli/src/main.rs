//! `fluxtrack`: synthesize, bound, and verify boundary controls that make the
//! heat flux at x = 0 track a prescribed signal.
//!
//! Exit codes: 0 success, 2 configuration error, 3 numerical-property
//! failure, 4 I/O error.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Debug)]
pub struct CliError {
    pub code: u8,
    pub message: String,
}

impl CliError {
    pub fn config(message: impl Into<String>) -> Self {
        Self { code: 2, message: message.into() }
    }

    pub fn numeric(message: impl Into<String>) -> Self {
        Self { code: 3, message: message.into() }
    }

    pub fn io(message: impl Into<String>) -> Self {
        Self { code: 4, message: message.into() }
    }

    /// Maps library errors: I/O and malformed input are environment errors,
    /// everything else is a numerical failure of the run.
    pub fn from_lib(e: fluxtrack::Error) -> Self {
        use fluxtrack::Error as E;
        match e {
            E::Io(err) => CliError::io(err.to_string()),
            E::CsvParse { .. } | E::InvalidGrid(_) | E::InvalidInput(_) | E::OutOfRange(_) => {
                CliError::config(e.to_string())
            }
            other => CliError::numeric(other.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(name = "fluxtrack", version, about = "Flux-tracking boundary control for the 1D heat equation")]
struct Cli {
    /// Path to the experiment config (JSON)
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory (overrides the config's out_dir)
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Seed for randomized property checks (overrides the config's seed)
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Suppress progress output
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Mollify the target, synthesize the flatness control, simulate, report
    Track,
    /// Sweep eps and tabulate measured cost against the growth-function bound
    CostCurve,
    /// Tabulate the growth function and its two-sided exponential bounds
    Gs,
    /// Transmute a wave-side control into a heat-side control and verify
    Transmute,
    /// Dual (adjoint) synthesis by conjugate-gradient minimization
    Hum,
    /// Run the numerical property suite
    Verify,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Track => "track",
            Command::CostCurve => "cost-curve",
            Command::Gs => "gs",
            Command::Transmute => "transmute",
            Command::Hum => "hum",
            Command::Verify => "verify",
        }
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let config_path = cli
        .config
        .as_ref()
        .ok_or_else(|| CliError::config("--config <path> is required"))?;
    let mut loaded = config::load(config_path)?;
    if let Some(declared) = &loaded.config.command {
        if declared != cli.command.name() {
            return Err(CliError::config(format!(
                "config declares command {declared:?} but {} was invoked",
                cli.command.name()
            )));
        }
    }
    if let Some(out) = &cli.out {
        loaded.config.out_dir = out.clone();
    }
    if let Some(seed) = cli.seed {
        loaded.config.seed = seed;
    }
    let ctx = commands::RunContext::new(loaded, cli.quiet)?;
    match cli.command {
        Command::Track => commands::run_track(&ctx),
        Command::CostCurve => commands::run_cost_curve(&ctx),
        Command::Gs => commands::run_gs(&ctx),
        Command::Transmute => commands::run_transmute(&ctx),
        Command::Hum => commands::run_hum(&ctx),
        Command::Verify => commands::run_verify(&ctx),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
