//! Episodic environment: the hidden mixing weights, the expert ensembles
//! revealed each episode, the true games they induce and noisy rewards.

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::game::{solve_saddle_point, GameMatrix, MixedStrategy};
use crate::learners::{Agent, Opponent, PlanDiagnostics};
use crate::rng::{Domain, SeedTree, StreamRng};

const MAX_THETA_REJECTIONS: usize = 1_000_000;

/// The `S` expert games revealed at the start of an episode.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpertEnsemble {
    matrices: Vec<GameMatrix>,
    episode: usize,
}

impl ExpertEnsemble {
    pub fn new(matrices: Vec<GameMatrix>, episode: usize) -> Result<Self> {
        let Some(first) = matrices.first() else {
            return Err(Error::config("experts", "an ensemble needs at least one expert game"));
        };
        let (rows, cols) = (first.rows(), first.cols());
        for m in &matrices {
            if m.rows() != rows {
                return Err(Error::DimensionMismatch {
                    what: "expert game rows",
                    expected: rows,
                    found: m.rows(),
                });
            }
            if m.cols() != cols {
                return Err(Error::DimensionMismatch {
                    what: "expert game columns",
                    expected: cols,
                    found: m.cols(),
                });
            }
            if m.entries().iter().any(|v| !(0.0..=1.0).contains(v)) {
                return Err(Error::config("experts", "expert game entries must lie in [0, 1]"));
            }
        }
        Ok(Self { matrices, episode })
    }

    pub fn matrices(&self) -> &[GameMatrix] {
        &self.matrices
    }

    pub fn episode(&self) -> usize {
        self.episode
    }

    pub fn experts(&self) -> usize {
        self.matrices.len()
    }

    pub fn rows(&self) -> usize {
        self.matrices[0].rows()
    }

    pub fn cols(&self) -> usize {
        self.matrices[0].cols()
    }

    /// The per-entry expert readings `z_ij = ([M_1]_ij, ..., [M_S]_ij)`.
    pub fn features(&self, i: usize, j: usize) -> Vec<f64> {
        self.matrices.iter().map(|m| m.get(i, j)).collect()
    }

    /// Features of every entry in row-major order.
    pub fn feature_table(&self) -> Vec<Vec<f64>> {
        let mut out = Vec::with_capacity(self.rows() * self.cols());
        for i in 0..self.rows() {
            for j in 0..self.cols() {
                out.push(self.features(i, j));
            }
        }
        out
    }

    /// `sum_s theta_s M_s`.
    pub fn combine(&self, theta: &[f64]) -> Result<GameMatrix> {
        if theta.len() != self.experts() {
            return Err(Error::DimensionMismatch {
                what: "mixing weights",
                expected: self.experts(),
                found: theta.len(),
            });
        }
        let mut entries = vec![0.0; self.rows() * self.cols()];
        for (m, w) in self.matrices.iter().zip(theta) {
            for (e, v) in entries.iter_mut().zip(m.entries()) {
                *e += w * v;
            }
        }
        GameMatrix::new(self.rows(), self.cols(), entries)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ThetaStarSpec {
    /// Use exactly these weights.
    Fixed { values: Vec<f64> },
    /// `N(mean * 1, I)`, redrawn until the Euclidean norm is at most
    /// `norm_bound` when one is given.
    Gaussian {
        #[serde(default = "default_theta_mean")]
        mean: f64,
        #[serde(default)]
        norm_bound: Option<f64>,
    },
}

fn default_theta_mean() -> f64 {
    0.5
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ExpertSpec {
    /// Fresh iid `U[0, 1]` entries for every expert in every episode.
    Uniform,
    /// One ensemble per episode, indexed `[episode][expert][row][col]`.
    Fixed { episodes: Vec<Vec<Vec<Vec<f64>>>> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvironmentConfig {
    pub rows: usize,
    pub cols: usize,
    pub experts: usize,
    pub episodes: usize,
    pub rounds: usize,
    pub noise_variance: f64,
    pub theta_star: ThetaStarSpec,
    pub expert_games: ExpertSpec,
}

impl EnvironmentConfig {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str| format!("environment.{name}");
        for (name, v) in [
            ("rows", self.rows),
            ("cols", self.cols),
            ("experts", self.experts),
            ("episodes", self.episodes),
            ("rounds", self.rounds),
        ] {
            if v == 0 {
                return Err(Error::config(field(name), "must be at least 1"));
            }
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(Error::config(field("noise_variance"), "must be a finite non-negative number"));
        }
        match &self.theta_star {
            ThetaStarSpec::Fixed { values } => {
                if values.len() != self.experts {
                    return Err(Error::config(
                        field("theta_star.values"),
                        format!("expected {} weights, found {}", self.experts, values.len()),
                    ));
                }
                if values.iter().any(|v| !v.is_finite()) {
                    return Err(Error::config(field("theta_star.values"), "weights must be finite"));
                }
            }
            ThetaStarSpec::Gaussian { mean, norm_bound } => {
                if !mean.is_finite() {
                    return Err(Error::config(field("theta_star.mean"), "must be finite"));
                }
                if let Some(b) = norm_bound {
                    if !(b.is_finite() && *b > 0.0) {
                        return Err(Error::config(field("theta_star.norm_bound"), "must be positive"));
                    }
                }
            }
        }
        if let ExpertSpec::Fixed { episodes } = &self.expert_games {
            if episodes.len() != self.episodes {
                return Err(Error::config(
                    field("expert_games.episodes"),
                    format!("expected {} ensembles, found {}", self.episodes, episodes.len()),
                ));
            }
            for (k, ens) in episodes.iter().enumerate() {
                if ens.len() != self.experts {
                    return Err(Error::config(
                        field("expert_games.episodes"),
                        format!("episode {k}: expected {} experts, found {}", self.experts, ens.len()),
                    ));
                }
                for m in ens {
                    let ok = m.len() == self.rows && m.iter().all(|r| r.len() == self.cols);
                    if !ok {
                        return Err(Error::config(
                            field("expert_games.episodes"),
                            format!("episode {k}: expert games must be {}x{}", self.rows, self.cols),
                        ));
                    }
                    if m.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
                        return Err(Error::config(
                            field("expert_games.episodes"),
                            format!("episode {k}: entries must lie in [0, 1]"),
                        ));
                    }
                }
            }
        }
        Ok(())
    }

    /// A bound on `||theta*||` implied by this configuration.
    pub fn parameter_bound(&self) -> f64 {
        match &self.theta_star {
            ThetaStarSpec::Fixed { values } => {
                let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
                if norm > 0.0 {
                    norm
                } else {
                    1.0
                }
            }
            ThetaStarSpec::Gaussian {
                norm_bound: Some(b), ..
            } => *b,
            ThetaStarSpec::Gaussian { mean, norm_bound: None } => {
                let s = self.experts as f64;
                mean.abs() * s.sqrt() + 3.0 * s.sqrt()
            }
        }
    }
}

/// One environment realization: a fixed `theta*` plus deterministic
/// per-episode expert and noise streams.
#[derive(Debug, Clone)]
pub struct Environment {
    config: EnvironmentConfig,
    theta_star: Vec<f64>,
    rejections: usize,
    seeds: SeedTree,
}

/// What an episode materializes: the revealed ensemble and the hidden game.
#[derive(Debug, Clone)]
pub struct Episode {
    pub index: usize,
    pub ensemble: ExpertEnsemble,
    pub true_game: GameMatrix,
}

impl Environment {
    pub fn generate(config: EnvironmentConfig, seed: u64) -> Result<Self> {
        config.validate()?;
        let seeds = SeedTree::new(seed);
        let (theta_star, rejections) = match &config.theta_star {
            ThetaStarSpec::Fixed { values } => (values.clone(), 0),
            ThetaStarSpec::Gaussian { mean, norm_bound } => {
                let mut rng = seeds.stream(Domain::ThetaStar, 0);
                draw_theta(&mut rng, config.experts, *mean, *norm_bound)?
            }
        };
        Ok(Self {
            config,
            theta_star,
            rejections,
            seeds,
        })
    }

    pub fn config(&self) -> &EnvironmentConfig {
        &self.config
    }

    pub fn theta_star(&self) -> &[f64] {
        &self.theta_star
    }

    /// How many Gaussian draws were rejected for exceeding the norm bound.
    pub fn rejections(&self) -> usize {
        self.rejections
    }

    pub fn episode(&self, k: usize) -> Result<Episode> {
        let cfg = &self.config;
        if k >= cfg.episodes {
            return Err(Error::IndexOutOfRange {
                what: "episodes",
                index: k,
                size: cfg.episodes,
            });
        }
        let matrices = match &cfg.expert_games {
            ExpertSpec::Uniform => {
                let mut rng = self.seeds.stream(Domain::Experts, k as u64);
                let unit = Uniform::new_inclusive(0.0, 1.0).expect("valid range");
                (0..cfg.experts)
                    .map(|_| {
                        let entries = (0..cfg.rows * cfg.cols).map(|_| unit.sample(&mut rng)).collect();
                        GameMatrix::new(cfg.rows, cfg.cols, entries)
                    })
                    .collect::<Result<Vec<_>>>()?
            }
            ExpertSpec::Fixed { episodes } => episodes[k]
                .iter()
                .map(|m| GameMatrix::from_rows(m))
                .collect::<Result<Vec<_>>>()?,
        };
        let ensemble = ExpertEnsemble::new(matrices, k)?;
        let true_game = ensemble.combine(&self.theta_star)?;
        Ok(Episode {
            index: k,
            ensemble,
            true_game,
        })
    }

    /// Noise stream of episode `k`; the `t`-th draw is `eta_t` regardless of
    /// which entry is played.
    pub fn noise_stream(&self, k: usize) -> StreamRng {
        self.seeds.stream(Domain::Noise, k as u64)
    }
}

fn draw_theta(
    rng: &mut StreamRng,
    experts: usize,
    mean: f64,
    norm_bound: Option<f64>,
) -> Result<(Vec<f64>, usize)> {
    for rejections in 0..MAX_THETA_REJECTIONS {
        let theta: Vec<f64> = (0..experts)
            .map(|_| mean + rng.sample::<f64, _>(StandardNormal))
            .collect();
        let norm = theta.iter().map(|v| v * v).sum::<f64>().sqrt();
        match norm_bound {
            Some(b) if norm > b => continue,
            _ => return Ok((theta, rejections)),
        }
    }
    Err(Error::config(
        "environment.theta_star.norm_bound",
        format!("no draw fell inside the bound after {MAX_THETA_REJECTIONS} attempts"),
    ))
}

/// `M[i, j] + eta`, `eta ~ N(0, noise_variance)`.
///
/// Exactly one normal variate is taken from `rng` per call, even when the
/// variance is zero, so the stream position depends only on the round.
pub fn emit_reward<R: Rng + ?Sized>(
    m: &GameMatrix,
    i: usize,
    j: usize,
    noise_variance: f64,
    rng: &mut R,
) -> Result<f64> {
    if i >= m.rows() {
        return Err(Error::IndexOutOfRange {
            what: "rows",
            index: i,
            size: m.rows(),
        });
    }
    if j >= m.cols() {
        return Err(Error::IndexOutOfRange {
            what: "columns",
            index: j,
            size: m.cols(),
        });
    }
    let eta: f64 = rng.sample(StandardNormal);
    Ok(m.get(i, j) + noise_variance.sqrt() * eta)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RoundRecord {
    pub t: usize,
    pub row: usize,
    pub col: usize,
    pub reward: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EpisodeTrace {
    pub episode: usize,
    pub rounds: Vec<RoundRecord>,
    /// Learner mixed strategy in force at each round.
    pub learner_policies: Vec<Vec<f64>>,
    /// Opponent mixed strategy for the episode.
    pub opponent_strategy: Vec<f64>,
    /// `val(M^(k))` of the true game.
    pub value: f64,
    pub planning: Option<PlanDiagnostics>,
}

impl EpisodeTrace {
    /// Average learner policy over the episode.
    pub fn mean_policy(&self) -> Vec<f64> {
        let n = self.learner_policies.len().max(1) as f64;
        let width = self.learner_policies.first().map_or(0, Vec::len);
        let mut out = vec![0.0; width];
        for p in &self.learner_policies {
            for (o, v) in out.iter_mut().zip(p) {
                *o += v / n;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct TrialTrace {
    pub learner: String,
    pub theta_star: Vec<f64>,
    pub episodes: Vec<EpisodeTrace>,
}

/// Plays episode `k`: reveal the ensemble, `T` simultaneous rounds, then the
/// learner's end-of-episode update.
pub fn run_episode(
    env: &Environment,
    episode: &Episode,
    learner: &mut dyn Agent,
    opponent: &mut Opponent,
    previous: Option<&EpisodeTrace>,
) -> Result<EpisodeTrace> {
    let game = &episode.true_game;
    let saddle = solve_saddle_point(game)?;
    let prev_policy = previous.map(EpisodeTrace::mean_policy);
    let opponent_strategy = opponent.begin_episode(game, prev_policy.as_deref(), Some(&saddle))?;

    learner.begin_episode(&episode.ensemble)?;
    let planning = learner.plan_diagnostics();
    let mut noise = env.noise_stream(episode.index);
    let rounds_n = env.config().rounds;
    let mut rounds = Vec::with_capacity(rounds_n);
    let mut learner_policies = Vec::with_capacity(rounds_n);
    for t in 1..=rounds_n {
        // neither side sees the other's current action
        let row = learner.act(t)?;
        let col = opponent.try_act()?;
        if row >= game.rows() {
            return Err(Error::IndexOutOfRange {
                what: "learner actions",
                index: row,
                size: game.rows(),
            });
        }
        let policy = learner
            .current_policy()
            .ok_or(Error::Protocol("learner acted without a policy"))?
            .probs()
            .to_vec();
        let reward = emit_reward(game, row, col, env.config().noise_variance, &mut noise)?;
        learner.observe(row, col, reward)?;
        rounds.push(RoundRecord { t, row, col, reward });
        learner_policies.push(policy);
    }
    learner.end_episode()?;
    Ok(EpisodeTrace {
        episode: episode.index,
        rounds,
        learner_policies,
        opponent_strategy: opponent_strategy.into_vec(),
        value: saddle.value,
        planning,
    })
}

/// Runs all `K` episodes of `env` for one learner/opponent pair.
pub fn run_trial(env: &Environment, learner: &mut dyn Agent, opponent: &mut Opponent) -> Result<TrialTrace> {
    let mut episodes: Vec<EpisodeTrace> = Vec::with_capacity(env.config().episodes);
    for k in 0..env.config().episodes {
        let episode = env.episode(k)?;
        let trace = run_episode(env, &episode, learner, opponent, episodes.last())?;
        episodes.push(trace);
    }
    Ok(TrialTrace {
        learner: learner.name().to_string(),
        theta_star: env.theta_star().to_vec(),
        episodes,
    })
}

/// Convenience for tests and tools: the true games of every episode.
pub fn true_games(env: &Environment) -> Result<Vec<GameMatrix>> {
    (0..env.config().episodes)
        .map(|k| env.episode(k).map(|e| e.true_game))
        .collect()
}

pub(crate) fn check_strategy_len(s: &MixedStrategy, n: usize, what: &'static str) -> Result<()> {
    if s.len() != n {
        return Err(Error::DimensionMismatch {
            what,
            expected: n,
            found: s.len(),
        });
    }
    Ok(())
}
