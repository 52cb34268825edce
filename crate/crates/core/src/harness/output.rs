use std::fs::{self, File};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentConfig, OutputFormat, RunManifest, TrialOutcome, MANIFEST_FILE};
use crate::environment::TrialTrace;
use crate::error::{Error, Result};
use crate::learners::PlanDiagnostics;

pub const PLOT_DATA_FILE: &str = "plot_data.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricRow {
    pub series: String,
    /// 1-based episode index.
    pub episode: usize,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AggregateRow {
    pub learner: String,
    pub series: String,
    pub episode: usize,
    pub mean: f64,
    pub stderr: f64,
    pub trials: usize,
}

fn output_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Output {
        path: path.to_path_buf(),
        source,
    }
}

pub(super) fn prepare_dir(dir: &Path) -> Result<()> {
    let trials = dir.join("trials");
    fs::create_dir_all(&trials).map_err(output_err(&trials))
}

fn trial_dir(index: usize) -> PathBuf {
    PathBuf::from("trials").join(format!("trial-{index:04}"))
}

pub(super) fn metrics_file(index: usize, learner: &str, format: OutputFormat) -> PathBuf {
    trial_dir(index).join(format!("{learner}.metrics.{}", format.extension()))
}

fn trace_file(index: usize, learner: &str) -> PathBuf {
    trial_dir(index).join(format!("{learner}.trace.jsonl"))
}

fn relative(path: &Path) -> String {
    path.to_string_lossy().replace('\\', "/")
}

fn metric_rows(series: &[(String, Vec<f64>)]) -> Vec<MetricRow> {
    series
        .iter()
        .flat_map(|(name, values)| {
            values.iter().enumerate().map(move |(k, &value)| MetricRow {
                series: name.clone(),
                episode: k + 1,
                value,
            })
        })
        .collect()
}

pub(super) fn write_trials(dir: &Path, config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Result<Vec<String>> {
    let mut files = Vec::new();
    for outcome in outcomes {
        let tdir = dir.join(trial_dir(outcome.index));
        fs::create_dir_all(&tdir).map_err(output_err(&tdir))?;
        for run in &outcome.runs {
            let trace_rel = trace_file(outcome.index, &run.name);
            write_trace(&dir.join(&trace_rel), &run.trace)?;
            files.push(relative(&trace_rel));

            let metrics_rel = metrics_file(outcome.index, &run.name, config.output.format);
            write_rows(&dir.join(&metrics_rel), config.output.format, &metric_rows(&run.all_series()))?;
            files.push(relative(&metrics_rel));
        }
    }
    Ok(files)
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum TraceLine<'a> {
    Episode {
        episode: usize,
        value: f64,
        opponent_strategy: &'a [f64],
        planning: Option<&'a PlanDiagnostics>,
    },
    Round {
        episode: usize,
        t: usize,
        row: usize,
        col: usize,
        reward: f64,
    },
}

fn write_trace(path: &Path, trace: &TrialTrace) -> Result<()> {
    let file = File::create(path).map_err(output_err(path))?;
    let mut w = BufWriter::new(file);
    for ep in &trace.episodes {
        let header = TraceLine::Episode {
            episode: ep.episode + 1,
            value: ep.value,
            opponent_strategy: &ep.opponent_strategy,
            planning: ep.planning.as_ref(),
        };
        writeln_json(&mut w, &header, path)?;
        for rec in &ep.rounds {
            let line = TraceLine::Round {
                episode: ep.episode + 1,
                t: rec.t,
                row: rec.row,
                col: rec.col,
                reward: rec.reward,
            };
            writeln_json(&mut w, &line, path)?;
        }
    }
    w.flush().map_err(output_err(path))
}

fn writeln_json<W: Write, T: Serialize>(w: &mut W, value: &T, path: &Path) -> Result<()> {
    serde_json::to_writer(&mut *w, value).map_err(|e| Error::Output {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    w.write_all(b"\n").map_err(output_err(path))
}

fn write_rows<T: Serialize>(path: &Path, format: OutputFormat, rows: &[T]) -> Result<()> {
    let file = File::create(path).map_err(output_err(path))?;
    match format {
        OutputFormat::Csv => {
            let mut w = csv::Writer::from_writer(BufWriter::new(file));
            for row in rows {
                w.serialize(row).map_err(|e| csv_err(path, e))?;
            }
            w.flush().map_err(output_err(path))
        }
        OutputFormat::JsonLines => {
            let mut w = BufWriter::new(file);
            for row in rows {
                writeln_json(&mut w, row, path)?;
            }
            w.flush().map_err(output_err(path))
        }
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    Error::Output {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    }
}

pub fn read_metric_rows(path: &Path, format: OutputFormat) -> Result<Vec<MetricRow>> {
    let file = File::open(path).map_err(|source| Error::Input {
        path: path.to_path_buf(),
        source,
    })?;
    let malformed = |reason: String| Error::Malformed {
        path: path.to_path_buf(),
        reason,
    };
    match format {
        OutputFormat::Csv => csv::Reader::from_reader(BufReader::new(file))
            .deserialize()
            .map(|r| r.map_err(|e| malformed(e.to_string())))
            .collect(),
        OutputFormat::JsonLines => BufReader::new(file)
            .lines()
            .filter(|l| !matches!(l, Ok(s) if s.trim().is_empty()))
            .map(|l| {
                let l = l.map_err(|e| malformed(e.to_string()))?;
                serde_json::from_str(&l).map_err(|e| malformed(e.to_string()))
            })
            .collect(),
    }
}

/// Mean and standard error across trials for every `(learner, series,
/// episode)`. Input is per learner, per trial, in trial order.
pub fn aggregate(per_learner: &[(String, Vec<Vec<MetricRow>>)]) -> Vec<AggregateRow> {
    let mut out = Vec::new();
    for (learner, trials) in per_learner {
        let Some(first) = trials.first() else { continue };
        for (pos, key) in first.iter().enumerate() {
            let values: Vec<f64> = trials
                .iter()
                .filter_map(|rows| {
                    rows.get(pos)
                        .filter(|r| r.series == key.series && r.episode == key.episode)
                        .or_else(|| rows.iter().find(|r| r.series == key.series && r.episode == key.episode))
                        .map(|r| r.value)
                })
                .collect();
            let (mean, stderr) = mean_stderr(&values);
            out.push(AggregateRow {
                learner: learner.clone(),
                series: key.series.clone(),
                episode: key.episode,
                mean,
                stderr,
                trials: values.len(),
            });
        }
    }
    out
}

/// Sample mean and `sd / sqrt(n)` (zero for a single trial).
pub fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n == 1 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

pub(super) fn write_aggregate(dir: &Path, config: &ExperimentConfig, outcomes: &[TrialOutcome]) -> Result<String> {
    let per_learner: Vec<(String, Vec<Vec<MetricRow>>)> = config
        .learners
        .iter()
        .enumerate()
        .map(|(li, spec)| {
            let trials = outcomes.iter().map(|o| metric_rows(&o.runs[li].all_series())).collect();
            (spec.name().to_string(), trials)
        })
        .collect();
    let name = format!("aggregate.{}", config.output.format.extension());
    write_rows(&dir.join(&name), config.output.format, &aggregate(&per_learner))?;
    Ok(name)
}

pub(super) fn write_manifest(dir: &Path, manifest: &RunManifest) -> Result<()> {
    let path = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(manifest).expect("manifest is serializable");
    fs::write(&path, text + "\n").map_err(output_err(&path))
}

#[derive(Serialize)]
struct PlotRow<'a> {
    learner: &'a str,
    series: &'a str,
    episode: usize,
    mean: f64,
    stderr: f64,
}

/// Reads a finished run's per-trial metric files and writes a tidy
/// `learner, series, episode, mean, stderr` table to `plot_data.csv`.
///
/// An empty `series` selection keeps every series.
pub fn emit_plot_data(run_dir: &Path, series: &[String]) -> Result<PathBuf> {
    let manifest = RunManifest::load(&run_dir.join(MANIFEST_FILE))?;
    let format = manifest.config.output.format;
    let mut per_learner = Vec::new();
    for spec in &manifest.config.learners {
        let learner = spec.name().to_string();
        let trials = manifest
            .trials
            .iter()
            .map(|t| read_metric_rows(&run_dir.join(metrics_file(t.index, &learner, format)), format))
            .collect::<Result<Vec<_>>>()?;
        per_learner.push((learner, trials));
    }
    if !series.is_empty() {
        let missing: Vec<String> = series
            .iter()
            .filter(|name| {
                !per_learner
                    .iter()
                    .any(|(_, trials)| trials.iter().flatten().any(|r| &r.series == *name))
            })
            .cloned()
            .collect();
        if !missing.is_empty() {
            return Err(Error::MissingSeries(missing));
        }
        for (_, trials) in &mut per_learner {
            for rows in trials.iter_mut() {
                rows.retain(|r| series.contains(&r.series));
            }
        }
    }
    let rows = aggregate(&per_learner);
    let path = run_dir.join(PLOT_DATA_FILE);
    let file = File::create(&path).map_err(output_err(&path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for r in &rows {
        w.serialize(PlotRow {
            learner: &r.learner,
            series: &r.series,
            episode: r.episode,
            mean: r.mean,
            stderr: r.stderr,
        })
        .map_err(|e| csv_err(&path, e))?;
    }
    w.flush().map_err(output_err(&path))?;
    Ok(path)
}
