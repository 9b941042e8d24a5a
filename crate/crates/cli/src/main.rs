mod config;
mod counterexample;
mod error;
mod source;
mod sweep;
mod validate;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Parser)]
#[command(name = "opsplit", version, about = "Monotone operator splitting experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a method sweep described by a JSON config file.
    Run {
        #[arg(long)]
        config: PathBuf,
    },
    /// Compare predicted and measured FDRF growth on the rotation instance.
    Counterexample {
        #[arg(long)]
        gamma: f64,
        #[arg(long)]
        mu: f64,
        #[arg(long, value_delimiter = ',', required = true)]
        omega: Vec<f64>,
    },
    /// Check structural and analytic invariants of one problem.
    Validate {
        /// JSON file or `builder:NAME:ARGS`.
        problem: String,
    },
}

fn dispatch(cmd: Command) -> Result<bool, CliError> {
    match cmd {
        Command::Run { config } => {
            let (summary, ok) = sweep::cmd_run(&config)?;
            for c in &summary.cells {
                println!(
                    "{:<28} {:<6} gamma={:<12.6e} status={:<9} iters={}",
                    c.file, c.method, c.gamma, c.status, c.iters
                );
            }
            Ok(ok)
        }
        Command::Counterexample { gamma, mu, omega } => {
            counterexample::cmd_counterexample(gamma, mu, &omega)?;
            Ok(true)
        }
        Command::Validate { problem } => {
            let results = validate::cmd_validate(&problem)?;
            Ok(results.iter().all(|r| r.passed))
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match dispatch(cli.command) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
