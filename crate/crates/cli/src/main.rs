//! `simplex` command-line tool: train split models, emit explanation
//! reports, and run the benchmark / detection / corruption experiments.

mod commands;
mod config;
mod data;
mod error;
mod report;
mod svg;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::error::{CliError, CliResult};

#[derive(Parser)]
#[command(
    name = "simplex",
    version,
    about = "Example-based explanations by corpus decomposition in latent space"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a split model and write a checkpoint plus a training log.
    Train(CommonArgs),
    /// Decompose test examples over a corpus and write JSON/SVG reports.
    Explain(CommonArgs),
    /// Sweep K and compare against KNN and representer baselines.
    Benchmark(CommonArgs),
    /// Residual-based outlier detection curves.
    Detect(CommonArgs),
    /// Corpus-corruption experiment comparing importance rankings.
    Corrupt(CommonArgs),
}

#[derive(Args)]
struct CommonArgs {
    /// Key=value configuration file.
    #[arg(long)]
    config: PathBuf,
    /// Global seed; overrides `seed` in the config file.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Worker threads for batch work; defaults to all cores.
    #[arg(long)]
    jobs: Option<usize>,
}

fn run(cli: Cli) -> CliResult<()> {
    let args = match &cli.command {
        Command::Train(a)
        | Command::Explain(a)
        | Command::Benchmark(a)
        | Command::Detect(a)
        | Command::Corrupt(a) => a,
    };
    if let Some(jobs) = args.jobs {
        if jobs == 0 {
            return Err(CliError::Usage("--jobs must be >= 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build_global()
            .map_err(|e| CliError::Usage(format!("thread pool: {e}")))?;
    }
    std::fs::create_dir_all(&args.out).map_err(|e| CliError::Data(format!("--out: {e}")))?;
    match &cli.command {
        Command::Train(a) => commands::train::run(a),
        Command::Explain(a) => commands::explain::run(a),
        Command::Benchmark(a) => commands::benchmark::run(a),
        Command::Detect(a) => commands::detect::run(a),
        Command::Corrupt(a) => commands::corrupt::run(a),
    }
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap's default usage exit code is 2; the contract is 1.
            let _ = e.print();
            std::process::exit(if e.use_stderr() { 1 } else { 0 });
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("error: {e}");
        std::process::exit(e.exit_code());
    }
}
