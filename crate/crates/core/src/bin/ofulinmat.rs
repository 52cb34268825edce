use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ofulinmat::harness::{self, RunOptions};
use ofulinmat::{default_paper_config, ExperimentConfig, Result};

#[derive(Parser)]
#[command(name = "ofulinmat", version, about = "Optimistic learning in linearly mixed zero-sum games")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment from a TOML configuration.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Override the master seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Override the number of trials.
        #[arg(long)]
        trials: Option<usize>,
        /// Override the output directory.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Worker threads (0 = one per core).
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Re-run a finished experiment from its manifest.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        /// Output directory (default: `replay/` next to the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long, default_value_t = 0)]
        workers: usize,
    },
    /// Write `plot_data.csv` (mean and standard error per episode) for a run.
    PlotData {
        #[arg(long)]
        run: PathBuf,
        /// Comma-separated series to keep (default: all).
        #[arg(long, value_delimiter = ',')]
        series: Vec<String>,
    },
    /// Print the case-study configuration as TOML.
    PaperDefault,
}

fn execute(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            seed,
            trials,
            out,
            workers,
        } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.master_seed = seed;
            }
            if let Some(trials) = trials {
                cfg.trials = trials;
            }
            if let Some(out) = out {
                cfg.output.dir = out;
            }
            let manifest = harness::run_experiment(&cfg, &RunOptions { workers, seeds: None })?;
            println!(
                "wrote {} trials to {} in {:.2}s",
                manifest.trials.len(),
                manifest.config.output.dir.display(),
                manifest.wall_clock_seconds
            );
        }
        Command::Replay { manifest, out, workers } => {
            let replayed = harness::replay(&manifest, out, workers)?;
            println!(
                "replayed {} trials into {}",
                replayed.trials.len(),
                replayed.config.output.dir.display()
            );
        }
        Command::PlotData { run, series } => {
            let path = harness::emit_plot_data(&run, &series)?;
            println!("{}", path.display());
        }
        Command::PaperDefault => print!("{}", default_paper_config().to_toml_string()),
    }
    Ok(())
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
