//! `sage`: saliency-guided mixup augmentation toolkit.
//!
//! Subcommands cover the whole engine: `augment` mixes one image pair,
//! `train` runs the toy training harness, `eval-robustness` scores a
//! checkpoint under corruptions, `bench` times the offset search, and `viz`
//! renders an inspection grid. Exit codes: 0 success, 1 runtime failure,
//! 2 I/O or file-format error, 64 usage error.

mod augment;
mod bench;
mod error;
mod eval;
mod png_io;
mod setup;
mod train;
mod viz;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::error::CliError;

#[derive(Debug, Parser)]
#[command(
    name = "sage",
    version,
    about = "Saliency-guided mixup with offset search, plus baselines and a toy training harness"
)]
struct Cli {
    /// Cap on worker threads for parallel sections. `--threads 1` guarantees
    /// bit-reproducible runs; without the `parallel` build feature the flag
    /// is accepted and ignored.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    threads: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Augment one image pair and write the result, mask, and metadata.
    Augment(augment::AugmentArgs),
    /// Train the built-in classifier on the toy dataset.
    Train(train::TrainArgs),
    /// Score a checkpoint on clean and corrupted toy data.
    EvalRobustness(eval::EvalArgs),
    /// Time the offset search and the full augmentation pipeline.
    Bench(bench::BenchArgs),
    /// Render an inspection grid of one augmentation.
    Viz(viz::VizArgs),
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(err) => {
            let code = match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 64,
            };
            let _ = err.print();
            std::process::exit(code);
        }
    };

    if let Err(err) = run(cli) {
        eprintln!("error: {err}");
        std::process::exit(err.exit_code());
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    if let Some(threads) = cli.threads {
        setup::init_thread_pool(threads as usize)?;
    }
    match cli.command {
        Command::Augment(args) => augment::run(args),
        Command::Train(args) => train::run(args),
        Command::EvalRobustness(args) => eval::run(args),
        Command::Bench(args) => bench::run(args),
        Command::Viz(args) => viz::run(args),
    }
}
