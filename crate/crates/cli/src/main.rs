//! `qkd`: key rates, optimized sweeps, cutoffs and Monte Carlo checks for a
//! passive decoy-state BB84 transmitter.

mod commands;
mod config;

use clap::{Parser, Subcommand};
use commands::CliError;
use config::{RawConfig, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Debug, Parser)]
#[command(name = "qkd", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Flat `key = value` configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Override one configuration key; may be repeated.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    overrides: Vec<String>,

    /// Report file, or the file prefix for `sweep`.
    #[arg(long, global = true)]
    out: Option<String>,
}

#[derive(Debug, Clone, Copy, Subcommand)]
enum Command {
    /// Key rate and intermediates at the configured operating point.
    Rate,
    /// Optimized rate versus distance, one CSV per variant.
    Sweep,
    /// Optimal parameters at the configured distance.
    Optimize,
    /// Largest distance with a positive optimized rate.
    Cutoff,
    /// Event-level simulation compared with the analytic model.
    Montecarlo,
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut errors = Vec::new();
    let mut raw = match &cli.config {
        None => RawConfig::default(),
        Some(path) => match std::fs::read_to_string(path) {
            Ok(text) => RawConfig::parse(&text, &path.display().to_string(), &mut errors),
            Err(e) => return Err(CliError::Config(vec![format!("cannot read {}: {e}", path.display())])),
        },
    };
    for o in &cli.overrides {
        if let Err(e) = raw.assign(o) {
            errors.push(format!("--set: {e}"));
        }
    }
    let cfg = RunConfig::from_raw(&raw);
    match cfg {
        Ok(cfg) if errors.is_empty() => Ok(cfg),
        Ok(_) => Err(CliError::Config(errors)),
        Err(more) => {
            errors.extend(more);
            Err(CliError::Config(errors))
        }
    }
}

fn emit(report: &str, out: Option<&str>) -> Result<(), CliError> {
    print!("{report}");
    match out {
        Some(path) => commands::write_file(path.as_ref(), report),
        None => Ok(()),
    }
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let out = cli.out.as_deref();
    match cli.command {
        Command::Rate => emit(&commands::rate(&cfg)?, out),
        Command::Optimize => emit(&commands::optimize(&cfg)?, out),
        Command::Cutoff => emit(&commands::cutoff(&cfg)?, out),
        Command::Sweep => {
            for path in commands::sweep(&cfg, out.unwrap_or("sweep"))? {
                println!("{}", path.display());
            }
            Ok(())
        }
        Command::Montecarlo => {
            let (report, failures) = commands::montecarlo(&cfg)?;
            emit(&report, out)?;
            if failures > 0 {
                return Err(CliError::Mismatch(failures));
            }
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qkd: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
