//! `fockmult`: density, interpolation, sampling, reduction and phase-scan
//! experiments. Summaries go to JSON, tabular series to CSV, both in `--out`.

mod commands;
mod config;
mod error;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{Context, Output};
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "fockmult", version, about = "Sampling and interpolation experiments in weighted Fock spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Point-set CSV (`re,im[,mult]`).
    #[arg(long, global = true, value_name = "FILE")]
    set: Option<PathBuf>,

    /// TOML run configuration.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Output directory.
    #[arg(long, global = true, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Seed for generated data and random directions; overrides `seed` in the config.
    #[arg(long, global = true)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Finite-radius density profile.
    Density,
    /// Local interpolant residuals and an optional global least-squares solve.
    Interp {
        /// Interpolation data CSV (`re,im,j,c_re,c_im`).
        #[arg(long, value_name = "FILE")]
        data: Option<PathBuf>,
    },
    /// Finite-section frame bounds.
    Sample,
    /// Multiplicity reduction with density and sampling reports.
    Reduce,
    /// Lattice phase scan of A_N/B_N against spacing.
    Scan,
}

fn write_outputs(dir: &Path, out: &Output) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in &out.files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<Output, CliError> {
    let config = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    let seed = cli.seed.or(config.seed).unwrap_or(0);
    let data_path = match &cli.command {
        Command::Interp { data } => data.as_deref(),
        _ => None,
    };
    let ctx = Context {
        config,
        set_path: cli.set.as_deref(),
        data_path,
        seed,
    };
    let out = match cli.command {
        Command::Density => commands::density(&ctx)?,
        Command::Interp { .. } => commands::interp(&ctx)?,
        Command::Sample => commands::sample(&ctx)?,
        Command::Reduce => commands::reduce(&ctx)?,
        Command::Scan => commands::scan(&ctx)?,
    };
    write_outputs(&cli.out, &out)?;
    Ok(out)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(out) => {
            for w in &out.warnings {
                eprintln!("warning: {w}");
            }
            println!("{}", out.summary);
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
