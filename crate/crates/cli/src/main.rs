//! `windfield <command> --config <file> [--set key=value]... --out <dir>`
//!
//! Exit codes: 0 success, 1 verification failures (report still written),
//! 2 config error, 3 domain or numerical error.

mod config;
mod error;
mod run;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use config::Command;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "windfield", version, about = "Wind Riemannian structure toolkit")]
struct Args {
    #[arg(value_enum)]
    command: Command,
    /// JSON run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Override a config leaf by dotted path, e.g. `navigate.t_max=2`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    sets: Vec<String>,
    /// Output directory, created if missing.
    #[arg(long)]
    out: PathBuf,
}

fn threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("WINDFIELD_THREADS") else {
        return Ok(());
    };
    let n: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Config(format!("WINDFIELD_THREADS must be a positive integer, got `{raw}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(format!("cannot size the thread pool: {e}")))
}

fn main_inner(args: &Args) -> Result<bool, CliError> {
    threads()?;
    let text = std::fs::read_to_string(&args.config)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", args.config.display())))?;
    let (cfg, effective) = config::load(&text, &args.sets)?;
    let outcome = run::run(args.command, &cfg, &effective, &args.out)?;
    for f in &outcome.files {
        println!("{}", f.display());
    }
    Ok(outcome.passed)
}

fn main() -> ExitCode {
    let args = Args::parse();
    match main_inner(&args) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("windfield: verification failed; see the report");
            ExitCode::from(1)
        }
        Err(e) => {
            eprintln!("windfield: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
