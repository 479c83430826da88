//! Batch front end for the `nlrq` solvers: reads a TOML run configuration,
//! dispatches one command and writes trace CSVs and summary JSON.

pub mod config;
pub mod properties;
pub mod report;
pub mod run;

use std::path::PathBuf;

use clap::Parser;

pub use config::{Command, ConfigError, RunConfig};
pub use run::{output_dir, run, Outcome};

#[derive(Debug, Parser)]
#[command(name = "nlrq", version, about = "Least nonlinear Rayleigh quotients by inverse iteration and minimizing movements")]
pub struct Args {
    /// Run configuration (TOML).
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory; overrides `[output] dir`.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Random seed; overrides `seed` in the configuration.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Suppress progress output on stdout.
    #[arg(long)]
    pub quiet: bool,
}

/// Runs the command described by `args` and returns the exit status:
/// 0 on success, 1 on numeric failure or failed checks, 2 on configuration
/// errors.
pub fn execute(args: &Args) -> i32 {
    let mut config = match RunConfig::from_path(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return 2;
        }
    };
    if args.seed.is_some() {
        config.seed = args.seed;
    }
    let out = output_dir(&config, args.out.as_deref());
    let outcome = run(&config, &out, args.quiet);
    match &outcome {
        Outcome::Success => {}
        Outcome::ChecksFailed(m) | Outcome::NumericFailure(m) => eprintln!("error: {m}"),
        Outcome::Config(e) => eprintln!("error: {e}"),
    }
    outcome.code()
}
