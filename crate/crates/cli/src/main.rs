//! `smolpipe`: tokenize images, compare pipeline budgets, train the toy model
//! and run ablations. Every command writes `run-manifest.txt` into `--out`
//! before anything else.
//!
//! Exit codes: 0 success, 2 input error, 3 geometry or config error,
//! 4 context overflow. `SMOLPIPE_THREADS` caps the worker pool.

mod commands;
mod error;
mod manifest;

use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::commands::{ablate, budget, dataset, tokenize, train};
use crate::error::{CliError, Result};

#[derive(Debug, Parser)]
#[command(name = "smolpipe", version, about = "Small vision-language pipeline toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Tile an image and print its token layout.
    TokenizeImage(tokenize::TokenizeArgs),
    /// Token, context and memory budget per config.
    Budget(budget::BudgetArgs),
    /// Write a synthetic task set.
    GenerateDataset(dataset::DatasetArgs),
    /// Train the toy model on a dataset directory.
    TrainToy(train::TrainArgs),
    /// Sweep one setting and report held-out accuracy.
    Ablate(ablate::AblateArgs),
}

fn init_threads() -> Result<()> {
    let Ok(value) = std::env::var("SMOLPIPE_THREADS") else {
        return Ok(());
    };
    let n: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::input(format!("SMOLPIPE_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::input(e.to_string()))
}

fn run(cli: &Cli) -> Result<()> {
    init_threads()?;
    match &cli.command {
        Command::TokenizeImage(a) => tokenize::run(a),
        Command::Budget(a) => budget::run(a),
        Command::GenerateDataset(a) => dataset::run(a),
        Command::TrainToy(a) => train::run(a),
        Command::Ablate(a) => ablate::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.kind.exit_code()
        }
    }
}
