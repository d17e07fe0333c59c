use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use waterwave_cli::config::parse_config;
use waterwave_cli::scenario::{execute, CliError, Command};

#[derive(Parser)]
#[command(name = "waterwave", version, about = "Water waves over a moving bottom on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads for sweeps.
    #[arg(long, global = true, default_value_t = 1)]
    jobs: usize,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the scenario once.
    Run { config: PathBuf },
    /// One run per amplitude in `scenario.eps`, plus an aggregate table.
    Sweep { config: PathBuf },
    /// Identity checks; exits with 4 when a residual exceeds its tolerance.
    Check { config: PathBuf },
}

const CONFIG_ERROR: u8 = 2;
const RUN_FAILURE: u8 = 3;
const TOLERANCE_FAILURE: u8 = 4;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (cmd, path) = match &cli.command {
        Cmd::Run { config } => (Command::Run, config),
        Cmd::Sweep { config } => (Command::Sweep, config),
        Cmd::Check { config } => (Command::Check, config),
    };
    let text = match std::fs::read_to_string(path) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    let mut spec = match parse_config(&text) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {}: {e}", path.display());
            return ExitCode::from(CONFIG_ERROR);
        }
    };
    if let Some(seed) = cli.seed {
        spec.run.seed = seed;
    }
    match execute(cmd, &spec, &cli.out, cli.jobs) {
        Ok(outcome) => {
            for f in &outcome.files {
                println!("{}", f.display());
            }
            for f in &outcome.failures {
                eprintln!("run stopped early: {f}");
            }
            for f in &outcome.tolerance_failures {
                eprintln!("tolerance exceeded: {f}");
            }
            if !outcome.failures.is_empty() {
                ExitCode::from(RUN_FAILURE)
            } else if !outcome.tolerance_failures.is_empty() {
                ExitCode::from(TOLERANCE_FAILURE)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ (CliError::Config(_) | CliError::Input(_))) => {
            eprintln!("error: {e}");
            ExitCode::from(CONFIG_ERROR)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(RUN_FAILURE)
        }
    }
}
