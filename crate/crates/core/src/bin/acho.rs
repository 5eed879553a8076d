use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use acho::harness::{render_summary, run_experiment, summarize_dir, ExperimentSpec};
use acho::objectives::{gen_friedman, FriedmanVariant};
use acho::Error;

#[derive(Parser)]
#[command(
    name = "acho",
    version,
    about = "Adaptive conformal hyperparameter search"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every (run, seed) pair of an experiment spec.
    Run {
        spec: PathBuf,
        /// Output directory; overrides `output_dir` in the spec.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        tune_surrogates: bool,
        /// Record elapsed_ms in the trace files.
        #[arg(long)]
        wall_time: bool,
    },
    /// Summarize the traces under an output directory.
    Summarize { dir: PathBuf },
    /// Write a Friedman dataset as CSV.
    GenDataset {
        /// 1, 2 or 3.
        variant: u8,
        #[arg(long, default_value_t = 10_000)]
        n: usize,
        #[arg(long, default_value_t = 1.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

fn execute(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Run {
            spec,
            out,
            tune_surrogates,
            wall_time,
        } => {
            let mut spec = ExperimentSpec::load(&spec)?;
            spec.tune_surrogates |= tune_surrogates;
            spec.record_wall_time |= wall_time;
            let report = run_experiment(&spec, out.as_deref())?;
            print!("{}", render_summary(&report.summary));
        }
        Command::Summarize { dir } => print!("{}", render_summary(&summarize_dir(&dir)?)),
        Command::GenDataset {
            variant,
            n,
            noise,
            seed,
            out,
        } => {
            let v = FriedmanVariant::from_number(variant).ok_or_else(|| {
                Error::InvalidParams(format!("variant must be 1, 2 or 3, got {variant}"))
            })?;
            gen_friedman(v, n, noise, seed)?.write_csv(&out)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if matches!(e, Error::SpecParse { .. }) {
                1
            } else {
                2
            })
        }
    }
}
