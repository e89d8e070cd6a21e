use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use prp_sort::harness::{
    emit_report, generate_synthetic, run_experiment, write_synthetic, ExperimentConfig, HarnessError, OutputFormat,
    Overrides,
};
use prp_sort::Algorithm;

#[derive(Parser)]
#[command(name = "prp-sort", about = "Top-k pairwise ranking under an inference-call cost model")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment sweep and write the report.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Replace the algorithm matrix with one algorithm.
        #[arg(long)]
        algo: Option<Algorithm>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        pivot: Option<String>,
        #[arg(long)]
        cache: Option<bool>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        format: Option<OutputFormat>,
        /// Output path; `-` for stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Write a synthetic dataset as run, qrels and scores files.
    Synth {
        #[arg(long)]
        queries: usize,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the version.
    Version,
}

fn run(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            algo,
            batch_size,
            pivot,
            cache,
            k,
            seed,
            format,
            out,
        } => {
            let overrides = Overrides {
                algo,
                batch_size,
                pivot,
                cache,
                k,
                seed,
                format,
                out,
            };
            let cfg = ExperimentConfig::load(&config, &overrides)?;
            let report = run_experiment(&cfg)?;
            let failures: usize = report.queries.iter().filter(|q| q.error.is_some()).count();
            if failures > 0 {
                log::warn!("{failures} cells failed and are excluded from aggregates");
            }
            let path = cfg.output.clone().unwrap_or_else(|| PathBuf::from("-"));
            emit_report(&report, cfg.format, &path)
        }
        Command::Synth { queries, n, seed, out } => {
            let d = generate_synthetic(queries, n, seed)?;
            write_synthetic(&d, &out)
        }
        Command::Version => {
            println!("prp-sort {}", env!("CARGO_PKG_VERSION"));
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}
