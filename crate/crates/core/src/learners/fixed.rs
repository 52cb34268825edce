use crate::environment::ExpertEnsemble;
use crate::error::{Error, Result};
use crate::game::MixedStrategy;
use crate::rng::StreamRng;

use super::Agent;

/// Non-learning row player that samples every round from one fixed strategy.
#[derive(Debug, Clone)]
pub struct StaticAgent {
    name: String,
    strategy: MixedStrategy,
    rng: StreamRng,
    pending: bool,
}

impl StaticAgent {
    pub fn fixed(strategy: MixedStrategy, rng: StreamRng) -> Self {
        Self {
            name: "fixed".into(),
            strategy,
            rng,
            pending: false,
        }
    }

    pub fn uniform(arms: usize, rng: StreamRng) -> Result<Self> {
        Ok(Self {
            name: "uniform".into(),
            strategy: MixedStrategy::uniform(arms)?,
            rng,
            pending: false,
        })
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }
}

impl Agent for StaticAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn begin_episode(&mut self, ensemble: &ExpertEnsemble) -> Result<()> {
        if ensemble.rows() != self.strategy.len() {
            return Err(Error::DimensionMismatch {
                what: "static strategy",
                expected: ensemble.rows(),
                found: self.strategy.len(),
            });
        }
        Ok(())
    }

    fn act(&mut self, _t: usize) -> Result<usize> {
        self.pending = true;
        Ok(self.strategy.sample(&mut self.rng))
    }

    fn current_policy(&self) -> Option<&MixedStrategy> {
        Some(&self.strategy)
    }

    fn observe(&mut self, _own: usize, _opponent: usize, _reward: f64) -> Result<()> {
        if !std::mem::take(&mut self.pending) {
            return Err(Error::Protocol("observe called before act"));
        }
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        Ok(())
    }
}
