//! `spincm`: simulate spin Calogero-Moser chains and run the verification suites.
//!
//! Exit codes: 0 success, 1 a check did not pass, 2 usage or configuration
//! error, 3 runtime failure.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::{CommonArgs, Failure};
use config::Format;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "spincm", version, about = "Spin Calogero-Moser chains for SL_N(R): simulation and verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Common {
    /// TOML run configuration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Output directory (default: `[output] dir`, else the current directory).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,
    /// Seed for every random draw; overrides `seed` in the config.
    #[arg(long, value_name = "INT")]
    seed: Option<u64>,
    #[arg(long, value_enum)]
    format: Option<Format>,
    /// Tolerance override for the command's pass/fail check.
    #[arg(long, value_name = "FLOAT")]
    tol: Option<f64>,
}

impl From<Common> for CommonArgs {
    fn from(c: Common) -> Self {
        Self { config: c.config, out: c.out, seed: c.seed, format: c.format, tol: c.tol }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Integrate the configured Hamiltonian flow and write the trajectory.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Check that p stays constant and q moves linearly.
        #[arg(long)]
        assert_free_flight: bool,
    },
    /// Run a verification suite and write its JSON report.
    Verify {
        /// dk, commute, conserve, angles, projection, psi, dims, liouville or all.
        suite: String,
        #[command(flatten)]
        common: Common,
        /// Trials per chain shape (default: the suite's own count).
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Compare the integrated trajectory with the projection method.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

fn init_threads() -> Result<(), Failure> {
    let Ok(v) = std::env::var("SPINCM_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| Failure::Usage(format!("SPINCM_THREADS must be a positive integer, got '{v}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| Failure::Runtime(format!("thread pool: {e}")))
}

fn run(cli: Cli) -> Result<String, Failure> {
    init_threads()?;
    match cli.command {
        Command::Simulate { common, assert_free_flight } => commands::simulate(&common.into(), assert_free_flight),
        Command::Verify { suite, common, trials } => commands::verify(&suite, &common.into(), trials),
        Command::Compare { common } => commands::compare(&common.into()),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(text) => {
            println!("{text}");
            ExitCode::SUCCESS
        }
        Err(f) => {
            match &f {
                Failure::Check(_) => println!("{}", f.message()),
                _ => eprintln!("error: {}", f.message()),
            }
            ExitCode::from(f.exit_code() as u8)
        }
    }
}
