use serde::{Deserialize, Serialize};

use crate::environment::check_strategy_len;
use crate::error::{Error, Result};
use crate::game::{best_response, solve_saddle_point, GameMatrix, MixedStrategy, SaddlePoint, Side};
use crate::rng::StreamRng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OpponentPolicy {
    /// Plays the minimax column strategy of the true game.
    SaddleOracle,
    Uniform,
    /// Pure best response to the learner's average strategy in the previous
    /// episode; uniform when there is no previous episode.
    BestResponder,
    Fixed { strategy: Vec<f64> },
}

/// Mixed strategy the opponent commits to for an episode.
///
/// `history` is the learner's previous-episode strategy, if any.
pub fn opponent_strategy(
    policy: &OpponentPolicy,
    true_game: &GameMatrix,
    history: Option<&[f64]>,
) -> Result<MixedStrategy> {
    strategy_for(policy, true_game, history, None)
}

fn strategy_for(
    policy: &OpponentPolicy,
    game: &GameMatrix,
    history: Option<&[f64]>,
    saddle: Option<&SaddlePoint>,
) -> Result<MixedStrategy> {
    let n = game.cols();
    match policy {
        OpponentPolicy::SaddleOracle => match saddle {
            Some(sp) => Ok(sp.col_strategy.clone()),
            None => Ok(solve_saddle_point(game)?.col_strategy),
        },
        OpponentPolicy::Uniform => MixedStrategy::uniform(n),
        OpponentPolicy::BestResponder => match history {
            None => MixedStrategy::uniform(n),
            Some(mu) => {
                let mu = MixedStrategy::new(mu.to_vec())?;
                check_strategy_len(&mu, game.rows(), "learner history")?;
                let (col, _) = best_response(game, &mu, Side::Col)?;
                MixedStrategy::pure(n, col)
            }
        },
        OpponentPolicy::Fixed { strategy } => {
            let s = MixedStrategy::new(strategy.clone())?;
            check_strategy_len(&s, n, "fixed opponent strategy")?;
            Ok(s)
        }
    }
}

/// Column player driven by an [`OpponentPolicy`] and its own random stream.
#[derive(Debug, Clone)]
pub struct Opponent {
    policy: OpponentPolicy,
    rng: StreamRng,
    current: Option<MixedStrategy>,
}

impl Opponent {
    pub fn new(policy: OpponentPolicy, rng: StreamRng) -> Self {
        Self {
            policy,
            rng,
            current: None,
        }
    }

    pub fn policy(&self) -> &OpponentPolicy {
        &self.policy
    }

    /// Commits to this episode's strategy. A precomputed saddle point of
    /// `true_game` may be passed to avoid solving it twice.
    pub fn begin_episode(
        &mut self,
        true_game: &GameMatrix,
        history: Option<&[f64]>,
        saddle: Option<&SaddlePoint>,
    ) -> Result<MixedStrategy> {
        let s = strategy_for(&self.policy, true_game, history, saddle)?;
        self.current = Some(s.clone());
        Ok(s)
    }

    pub fn current(&self) -> Option<&MixedStrategy> {
        self.current.as_ref()
    }

    /// Samples a column from the committed strategy.
    ///
    /// # Panics
    /// If called before [`Opponent::begin_episode`].
    pub fn act(&mut self) -> usize {
        self.current
            .as_ref()
            .expect("opponent acted before begin_episode")
            .sample(&mut self.rng)
    }

    pub fn try_act(&mut self) -> Result<usize> {
        match &self.current {
            Some(s) => Ok(s.sample(&mut self.rng)),
            None => Err(Error::Protocol("opponent acted before begin_episode")),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    fn pennies() -> GameMatrix {
        GameMatrix::from_rows(&[[1.0, -1.0], [-1.0, 1.0]]).unwrap()
    }

    #[test]
    fn saddle_oracle_on_matching_pennies() {
        let s = opponent_strategy(&OpponentPolicy::SaddleOracle, &pennies(), None).unwrap();
        for p in s.probs() {
            assert!((p - 0.5).abs() < 1e-9);
        }
    }

    #[test]
    fn fixed_strategy_always_plays_its_column() {
        let mut opp = Opponent::new(
            OpponentPolicy::Fixed { strategy: vec![0.0, 1.0] },
            StreamRng::seed_from_u64(2),
        );
        assert!(opp.try_act().is_err());
        opp.begin_episode(&pennies(), None, None).unwrap();
        assert!((0..100).all(|_| opp.act() == 1));
    }

    #[test]
    fn best_responder_minimizes_against_history() {
        let s = opponent_strategy(&OpponentPolicy::BestResponder, &pennies(), Some(&[1.0, 0.0])).unwrap();
        assert_eq!(s.probs(), &[0.0, 1.0]);
        let cold = opponent_strategy(&OpponentPolicy::BestResponder, &pennies(), None).unwrap();
        assert_eq!(cold.probs(), &[0.5, 0.5]);
    }

    #[test]
    fn fixed_strategy_dimension_is_checked() {
        let bad = OpponentPolicy::Fixed { strategy: vec![1.0] };
        assert!(opponent_strategy(&bad, &pennies(), None).is_err());
    }
}
