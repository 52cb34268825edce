use crate::environment::ExpertEnsemble;
use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::rng::StreamRng;

use super::Agent;

/// Uniform-exploration weight `alpha_t = min(1, sqrt(n ln n / t))`.
pub fn exp3_mixing_weight(arms: usize, t: usize) -> f64 {
    let n = arms as f64;
    (n * n.ln() / t as f64).sqrt().min(1.0)
}

/// Learning rate `gamma_t = sqrt(2 ln n / (n t))`.
pub fn exp3_learning_rate(arms: usize, t: usize) -> f64 {
    let n = arms as f64;
    (2.0 * n.ln() / (n * t as f64)).sqrt()
}

/// `alpha_t / n + (1 - alpha_t) softmax(gamma_t * cumulative)`.
pub fn exp3_policy(cumulative: &[f64], t: usize) -> Vec<f64> {
    let n = cumulative.len();
    let alpha = exp3_mixing_weight(n, t);
    let gamma = exp3_learning_rate(n, t);
    let top = cumulative
        .iter()
        .map(|g| gamma * g)
        .fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = cumulative.iter().map(|g| (gamma * g - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    weights
        .iter()
        .map(|w| alpha / n as f64 + (1.0 - alpha) * w / total)
        .collect()
}

/// Exp3 over the row player's actions, restarted every episode.
///
/// Rewards are mapped affinely from `reward_range` onto `[0, 1]` (and
/// clipped) before the importance-weighted estimate is formed.
#[derive(Debug, Clone)]
pub struct Exp3Agent {
    name: String,
    arms: usize,
    reward_range: (f64, f64),
    cumulative: Vec<f64>,
    t: usize,
    policy: Option<MixedStrategy>,
    pending: Option<usize>,
    rng: StreamRng,
}

impl Exp3Agent {
    pub fn new(arms: usize, reward_range: (f64, f64), rng: StreamRng) -> Result<Self> {
        if arms == 0 {
            return Err(Error::config("exp3.arms", "must be at least 1"));
        }
        let (lo, hi) = reward_range;
        if !(lo.is_finite() && hi.is_finite() && lo < hi) {
            return Err(Error::config("exp3.reward_range", "must be a finite interval with min < max"));
        }
        Ok(Self {
            name: "exp3".into(),
            arms,
            reward_range,
            cumulative: vec![0.0; arms],
            t: 0,
            policy: None,
            pending: None,
            rng,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn cumulative_estimates(&self) -> &[f64] {
        &self.cumulative
    }

    pub fn round(&self) -> usize {
        self.t
    }

    /// Reward mapped into `[0, 1]`.
    pub fn normalize(&self, reward: f64) -> f64 {
        let (lo, hi) = self.reward_range;
        ((reward - lo) / (hi - lo)).clamp(0.0, 1.0)
    }

    fn reset(&mut self) {
        self.cumulative.iter_mut().for_each(|g| *g = 0.0);
        self.t = 0;
        self.policy = None;
        self.pending = None;
    }
}

impl Agent for Exp3Agent {
    fn name(&self) -> &str {
        &self.name
    }

    fn begin_episode(&mut self, ensemble: &ExpertEnsemble) -> Result<()> {
        if ensemble.rows() != self.arms {
            return Err(Error::DimensionMismatch {
                what: "exp3 arms",
                expected: self.arms,
                found: ensemble.rows(),
            });
        }
        self.reset();
        Ok(())
    }

    fn act(&mut self, _t: usize) -> Result<usize> {
        if self.pending.is_some() {
            return Err(Error::Protocol("act called twice without an observation"));
        }
        self.t += 1;
        let probs = exp3_policy(&self.cumulative, self.t);
        let policy = MixedStrategy::new(probs)?;
        let arm = policy.sample(&mut self.rng);
        self.policy = Some(policy);
        self.pending = Some(arm);
        Ok(arm)
    }

    fn current_policy(&self) -> Option<&MixedStrategy> {
        self.policy.as_ref()
    }

    fn observe(&mut self, own: usize, _opponent: usize, reward: f64) -> Result<()> {
        let arm = self
            .pending
            .take()
            .ok_or(Error::Protocol("observe called before act"))?;
        if own != arm {
            return Err(Error::Protocol("observed action differs from the chosen arm"));
        }
        if !reward.is_finite() {
            return Err(Error::NonFinite { what: "reward" });
        }
        let prob = self.policy.as_ref().map(|p| p.probs()[arm]).unwrap_or(1.0);
        self.cumulative[arm] += self.normalize(reward) / prob;
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        self.pending = None;
        Ok(())
    }
}
