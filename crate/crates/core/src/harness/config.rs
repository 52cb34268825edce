use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::environment::{EnvironmentConfig, ExpertSpec, ThetaStarSpec};
use crate::error::{Error, Result};
use crate::estimator::EstimatorConfig;
use crate::game::MixedStrategy;
use crate::learners::OpponentPolicy;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub trials: usize,
    pub master_seed: u64,
    pub environment: EnvironmentConfig,
    pub learners: Vec<LearnerSpec>,
    pub opponent: OpponentPolicy,
    pub output: OutputSpec,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum LearnerSpec {
    Ofulinmat {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        lambda: f64,
        bound: f64,
        delta: f64,
    },
    Exp3 {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        /// Raw reward interval mapped onto `[0, 1]`; defaults to
        /// `[-B S^{3/2}, B S^{3/2}]` with `B` the environment's parameter bound.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reward_range: Option<[f64; 2]>,
    },
    Fixed {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
        strategy: Vec<f64>,
    },
    Uniform {
        #[serde(default, skip_serializing_if = "Option::is_none")]
        name: Option<String>,
    },
}

impl LearnerSpec {
    pub fn name(&self) -> &str {
        let (explicit, kind) = match self {
            LearnerSpec::Ofulinmat { name, .. } => (name, "ofulinmat"),
            LearnerSpec::Exp3 { name, .. } => (name, "exp3"),
            LearnerSpec::Fixed { name, .. } => (name, "fixed"),
            LearnerSpec::Uniform { name } => (name, "uniform"),
        };
        explicit.as_deref().unwrap_or(kind)
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum OutputFormat {
    #[default]
    #[serde(rename = "csv")]
    Csv,
    #[serde(rename = "json-lines")]
    JsonLines,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::JsonLines => "jsonl",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: PathBuf,
    #[serde(default)]
    pub format: OutputFormat,
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("config", e.to_string().trim_end().to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string_pretty(self).expect("experiment config is always serializable")
    }

    /// Estimator settings for an optimistic learner in this environment.
    pub fn estimator_config(&self, lambda: f64, bound: f64, delta: f64) -> EstimatorConfig {
        EstimatorConfig {
            lambda,
            bound,
            delta,
            experts: self.environment.experts,
        }
    }

    /// Validates every field and fills defaults that depend on other fields.
    pub fn resolved(&self) -> Result<Self> {
        let mut cfg = self.clone();
        if cfg.trials == 0 {
            return Err(Error::config("trials", "must be at least 1"));
        }
        cfg.environment.validate()?;
        if cfg.learners.is_empty() {
            return Err(Error::config("learners", "at least one learner is required"));
        }
        let mut names = HashSet::new();
        let bound = cfg.environment.parameter_bound();
        let s = cfg.environment.experts as f64;
        for (idx, spec) in cfg.learners.iter_mut().enumerate() {
            let field = |f: &str| format!("learners[{idx}].{f}");
            if !names.insert(spec.name().to_string()) {
                return Err(Error::config(field("name"), format!("duplicate learner name `{}`", spec.name())));
            }
            if spec.name().is_empty() || spec.name().contains(['/', '\\', '.']) {
                return Err(Error::config(field("name"), "must be non-empty and not contain '/', '\\' or '.'"));
            }
            match spec {
                LearnerSpec::Ofulinmat {
                    lambda, bound, delta, ..
                } => {
                    let est = EstimatorConfig {
                        lambda: *lambda,
                        bound: *bound,
                        delta: *delta,
                        experts: self.environment.experts,
                    };
                    est.validate().map_err(|e| match e {
                        Error::InvalidConfig { field: f, reason } => Error::config(field(&f), reason),
                        other => other,
                    })?;
                }
                LearnerSpec::Exp3 { reward_range, .. } => {
                    let range = reward_range.get_or_insert_with(|| {
                        let half = bound * s.sqrt() * s;
                        [-half, half]
                    });
                    if !(range[0].is_finite() && range[1].is_finite() && range[0] < range[1]) {
                        return Err(Error::config(field("reward_range"), "must be [min, max] with min < max"));
                    }
                }
                LearnerSpec::Fixed { strategy, .. } => {
                    let s = MixedStrategy::new(strategy.clone())
                        .map_err(|e| Error::config(field("strategy"), e.to_string()))?;
                    if s.len() != cfg.environment.rows {
                        return Err(Error::config(
                            field("strategy"),
                            format!("expected {} probabilities, found {}", cfg.environment.rows, s.len()),
                        ));
                    }
                }
                LearnerSpec::Uniform { .. } => {}
            }
        }
        if let OpponentPolicy::Fixed { strategy } = &cfg.opponent {
            let s = MixedStrategy::new(strategy.clone())
                .map_err(|e| Error::config("opponent.strategy", e.to_string()))?;
            if s.len() != cfg.environment.cols {
                return Err(Error::config(
                    "opponent.strategy",
                    format!("expected {} probabilities, found {}", cfg.environment.cols, s.len()),
                ));
            }
        }
        Ok(cfg)
    }
}

/// The case-study setup: a 10x10 game mixed from 10 uniform experts,
/// 15 episodes of 200 rounds, `N(0, 0.5)` noise, against the saddle-point
/// attacker, with the optimistic learner and Exp3 side by side.
pub fn default_paper_config() -> ExperimentConfig {
    const B: f64 = 3.0;
    ExperimentConfig {
        trials: 20,
        master_seed: 20_210_301,
        environment: EnvironmentConfig {
            rows: 10,
            cols: 10,
            experts: 10,
            episodes: 15,
            rounds: 200,
            noise_variance: 0.5,
            theta_star: ThetaStarSpec::Gaussian {
                mean: 0.5,
                norm_bound: Some(B),
            },
            expert_games: ExpertSpec::Uniform,
        },
        learners: vec![
            LearnerSpec::Ofulinmat {
                name: None,
                lambda: 0.1,
                bound: B,
                delta: 3e-3,
            },
            LearnerSpec::Exp3 {
                name: None,
                reward_range: None,
            },
        ],
        opponent: OpponentPolicy::SaddleOracle,
        output: OutputSpec {
            dir: PathBuf::from("runs/paper-default"),
            format: OutputFormat::Csv,
        },
    }
}
