//! Multi-trial experiment runner, persistence and replay.

mod config;
mod output;

pub use config::{default_paper_config, ExperimentConfig, LearnerSpec, OutputFormat, OutputSpec};
pub use output::{aggregate, emit_plot_data, read_metric_rows, AggregateRow, MetricRow, PLOT_DATA_FILE};

use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::environment::{run_trial as play_trial, true_games, Environment, TrialTrace};
use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::learners::{Agent, Exp3Agent, OfulinmatAgent, Opponent, StaticAgent};
use crate::metrics::{diagnostic_series, regret_report, RegretReport};
use crate::rng::{Domain, SeedTree};

pub const MANIFEST_FILE: &str = "manifest.json";

/// One learner's play in one trial.
#[derive(Debug, Clone)]
pub struct LearnerRun {
    pub name: String,
    pub trace: TrialTrace,
    pub report: RegretReport,
    pub diagnostics: Vec<(String, Vec<f64>)>,
}

impl LearnerRun {
    /// Regret and diagnostic series in file order.
    pub fn all_series(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = self.report.series();
        out.extend(self.diagnostics.iter().cloned());
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrialOutcome {
    pub index: usize,
    pub seed: u64,
    pub theta_star: Vec<f64>,
    pub theta_rejections: usize,
    pub runs: Vec<LearnerRun>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialSummary {
    pub index: usize,
    pub seed: u64,
    pub theta_star: Vec<f64>,
    pub theta_rejections: usize,
}

/// Everything needed to reproduce a run, plus wall-clock bookkeeping.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub software_version: String,
    pub config: ExperimentConfig,
    pub trials: Vec<TrialSummary>,
    pub files: Vec<String>,
    pub started_at: String,
    pub wall_clock_seconds: f64,
}

impl RunManifest {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|e| Error::Malformed {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })
    }

    pub fn trial_seeds(&self) -> Vec<u64> {
        self.trials.iter().map(|t| t.seed).collect()
    }
}

/// Per-trial seeds derived from the master seed.
pub fn trial_seeds(config: &ExperimentConfig) -> Vec<u64> {
    let tree = SeedTree::new(config.master_seed);
    (0..config.trials as u64).map(|i| tree.trial_seed(i)).collect()
}

fn build_agent(config: &ExperimentConfig, spec: &LearnerSpec, index: usize, tree: &SeedTree) -> Result<Box<dyn Agent>> {
    let rng = tree.stream(Domain::Learner, index as u64);
    let name = spec.name().to_string();
    let agent: Box<dyn Agent> = match spec {
        LearnerSpec::Ofulinmat {
            lambda, bound, delta, ..
        } => Box::new(OfulinmatAgent::new(config.estimator_config(*lambda, *bound, *delta), rng)?.named(name)),
        LearnerSpec::Exp3 { reward_range, .. } => {
            let [lo, hi] = reward_range.ok_or_else(|| {
                Error::config(format!("learners[{index}].reward_range"), "unresolved; call resolved() first")
            })?;
            Box::new(Exp3Agent::new(config.environment.rows, (lo, hi), rng)?.named(name))
        }
        LearnerSpec::Fixed { strategy, .. } => {
            Box::new(StaticAgent::fixed(MixedStrategy::new(strategy.clone())?, rng).named(name))
        }
        LearnerSpec::Uniform { .. } => Box::new(StaticAgent::uniform(config.environment.rows, rng)?.named(name)),
    };
    Ok(agent)
}

/// Plays every configured learner against its own copy of the same
/// environment realization: identical `theta*`, experts, noise and opponent
/// stream.
pub fn run_trial(config: &ExperimentConfig, index: usize, seed: u64) -> Result<TrialOutcome> {
    let tree = SeedTree::new(seed);
    let env = Environment::generate(config.environment.clone(), seed)?;
    let games = true_games(&env)?;
    let mut runs = Vec::with_capacity(config.learners.len());
    for (li, spec) in config.learners.iter().enumerate() {
        let mut agent = build_agent(config, spec, li, &tree)?;
        let mut opponent = Opponent::new(config.opponent.clone(), tree.stream(Domain::Opponent, 0));
        let trace = play_trial(&env, agent.as_mut(), &mut opponent)?;
        let report = regret_report(&trace, &games)?;
        let diagnostics = diagnostic_series(&trace);
        runs.push(LearnerRun {
            name: spec.name().to_string(),
            trace,
            report,
            diagnostics,
        });
    }
    Ok(TrialOutcome {
        index,
        seed,
        theta_star: env.theta_star().to_vec(),
        theta_rejections: env.rejections(),
        runs,
    })
}

/// Runs the given trial seeds concurrently on up to `workers` threads
/// (0 = one per core). Results come back in trial order.
pub fn run_trials(config: &ExperimentConfig, seeds: &[u64], workers: usize) -> Result<Vec<TrialOutcome>> {
    let config = config.resolved()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::config("workers", e.to_string()))?;
    pool.install(|| {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &seed)| run_trial(&config, i, seed))
            .collect()
    })
}

#[derive(Debug, Clone, Default)]
pub struct RunOptions {
    pub workers: usize,
    /// Overrides derived trial seeds (used by replay).
    pub seeds: Option<Vec<u64>>,
}

/// Runs an experiment and persists traces, per-trial metrics, the aggregate
/// and the manifest under `config.output.dir`.
pub fn run_experiment(config: &ExperimentConfig, options: &RunOptions) -> Result<RunManifest> {
    let started = Instant::now();
    let started_at = chrono::Utc::now().to_rfc3339();
    let config = config.resolved()?;
    let seeds = match &options.seeds {
        Some(s) if s.len() != config.trials => {
            return Err(Error::config(
                "trials",
                format!("manifest lists {} seeds for {} trials", s.len(), config.trials),
            ))
        }
        Some(s) => s.clone(),
        None => trial_seeds(&config),
    };
    let out_dir = config.output.dir.clone();
    output::prepare_dir(&out_dir)?;
    let outcomes = run_trials(&config, &seeds, options.workers)?;
    let mut files = output::write_trials(&out_dir, &config, &outcomes)?;
    files.push(output::write_aggregate(&out_dir, &config, &outcomes)?);
    let manifest = RunManifest {
        software_version: env!("CARGO_PKG_VERSION").to_string(),
        config,
        trials: outcomes
            .iter()
            .map(|o| TrialSummary {
                index: o.index,
                seed: o.seed,
                theta_star: o.theta_star.clone(),
                theta_rejections: o.theta_rejections,
            })
            .collect(),
        files,
        started_at,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    output::write_manifest(&out_dir, &manifest)?;
    Ok(manifest)
}

/// Re-runs a manifest with its recorded configuration and trial seeds,
/// writing into `out` (default: `replay/` next to the manifest).
pub fn replay(manifest_path: &Path, out: Option<PathBuf>, workers: usize) -> Result<RunManifest> {
    let manifest = RunManifest::load(manifest_path)?;
    let mut config = manifest.config.clone();
    config.output.dir = match out {
        Some(dir) => dir,
        None => manifest_path
            .parent()
            .unwrap_or_else(|| Path::new("."))
            .join("replay"),
    };
    run_experiment(
        &config,
        &RunOptions {
            workers,
            seeds: Some(manifest.trial_seeds()),
        },
    )
}
