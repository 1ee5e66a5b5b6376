//! `csdac`: metric tables, mapping and basis search, Monte Carlo SNDR and
//! LUT export for current-steering DAC architectures.

mod arch;
mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use csdac_core::Error;

use crate::config::{ExperimentConfig, Overrides};

#[derive(Parser)]
#[command(name = "csdac", version, about = "Current-steering DAC weight design")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML); defaults are used for anything not set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true)]
    realizations: Option<usize>,
    #[arg(long, global = true)]
    sigma_delta: Option<f64>,
    /// Fraction of instances that must reach the reported yield SNDR.
    #[arg(long, global = true)]
    quantile: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Raw and normalized mismatch metric of each architecture.
    Metric,
    /// Search bases (`optimize:L`) or mappings (everything else).
    Optimize,
    /// SNDR distribution of each architecture over mismatch instances.
    Simulate,
    /// Hardware lookup table for a basis and mapping.
    ExportLut {
        #[arg(long)]
        basis: PathBuf,
        #[arg(long)]
        mapping: PathBuf,
    },
    /// Regenerate the published tables and figure data.
    Reproduce,
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_)
        | Error::Parse { .. }
        | Error::Io(_)
        | Error::Dimension { .. }
        | Error::KindMismatch { .. }
        | Error::Decode { .. } => 2,
        Error::Incomplete { .. } | Error::Infeasible(_) | Error::Capacity { .. } => 3,
        Error::Invariant(_) => 4,
    }
}

fn run(cli: Cli) -> csdac_core::Result<()> {
    let c = cli.common;
    let overrides = Overrides {
        seed: c.seed,
        out: c.out,
        realizations: c.realizations,
        sigma_delta: c.sigma_delta,
        quantile: c.quantile,
    };
    let cfg = ExperimentConfig::load(c.config.as_deref(), &overrides)?;
    match cli.command {
        Command::Metric => print!("{}", commands::metric(&cfg)?),
        Command::Optimize => print!("{}", commands::optimize(&cfg)?),
        Command::Simulate => print!("{}", commands::simulate(&cfg)?),
        Command::ExportLut { basis, mapping } => {
            commands::export_lut(&cfg, &basis, &mapping)?;
            println!("{}", cfg.out.join("lut.txt").display());
        }
        Command::Reproduce => {
            for p in commands::reproduce(&cfg)? {
                println!("{}", p.display());
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
