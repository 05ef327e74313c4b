//! `halfsign`: build half-integral weight eigenforms, tabulate sign statistics of their
//! coefficients, and verify the invariants that tie them together.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Parser, Subcommand};

use config::{FileConfig, JobConfig, JobFlags};

#[derive(Parser)]
#[command(name = "halfsign", version, about)]
struct Cli {
    /// TOML file with any of the job options; flags take precedence
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute the cusp-space basis and eigenforms and write the caches
    Build(JobFlags),
    /// Write sign-count, sign-change, moment, exponent-fit and series reports
    Stats(JobFlags),
    /// Run the invariant suite against the caches; exits nonzero on any failure
    Verify(JobFlags),
}

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(p) => FileConfig::load(p)?,
        None => FileConfig::default(),
    };
    match cli.command {
        Command::Build(f) => commands::cmd_build(&JobConfig::resolve(&f, &file)?).map(|()| true),
        Command::Stats(f) => commands::cmd_stats(&JobConfig::resolve(&f, &file)?).map(|()| true),
        Command::Verify(f) => commands::cmd_verify(&JobConfig::resolve(&f, &file)?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
