//! `phcomm`: runs acid/base pulse scenarios through the channel solver and
//! writes receiver series, comparisons and ISI summaries.

mod commands;
mod config;
mod error;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::Axis;
use config::RunConfig;
use error::CliError;

#[derive(Debug, Parser)]
#[command(name = "phcomm", version, about = "pH molecular-communication channel simulator")]
struct Cli {
    /// Output directory; overrides `[output] dir` in the config.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Scenarios solved in parallel (0 = one per core).
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Reserved; every run is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve every scenario; write one CSV per scenario and a summary.
    Simulate { config: PathBuf },
    /// Compare the solver against closed-form and reaction-free references.
    Compare { config: PathBuf },
    /// Re-run the scenarios over a list of values for one parameter.
    Sweep {
        config: PathBuf,
        #[arg(long, value_enum)]
        axis: Axis,
        /// Comma-separated values.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        values: Vec<String>,
        /// Sweep only this scenario id.
        #[arg(long)]
        scenario: Option<String>,
    },
}

fn parse_values(raw: &[String]) -> Result<Vec<f64>, CliError> {
    raw.iter()
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse::<f64>()
                .map_err(|_| CliError::Config(format!("sweep value `{s}` is not a number")))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), CliError> {
    let path = match &cli.command {
        Command::Simulate { config } | Command::Compare { config } | Command::Sweep { config, .. } => config,
    };
    let mut cfg = RunConfig::load(path)?;
    if let Command::Sweep { scenario: Some(id), .. } = &cli.command {
        cfg.scenario.retain(|s| &s.id == id);
        if cfg.scenario.is_empty() {
            return Err(CliError::Config(format!("no scenario with id `{id}`")));
        }
    }
    let out = cli.out.clone().unwrap_or_else(|| cfg.output.dir.clone());
    let (written, text) = match &cli.command {
        Command::Simulate { .. } => commands::simulate(&cfg, &out, cli.workers)?,
        Command::Compare { .. } => commands::compare(&cfg, &out, cli.workers)?,
        Command::Sweep { axis, values, .. } => {
            commands::sweep(&cfg, *axis, &parse_values(values)?, &out, cli.workers)?
        }
    };
    print!("{text}");
    for name in written {
        println!("wrote {}", out.join(name).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
