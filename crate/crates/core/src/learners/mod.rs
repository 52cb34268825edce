//! Row-player learners and column-player opponents.

mod exp3;
mod fixed;
mod ofulinmat;
mod opponent;

pub use exp3::{exp3_learning_rate, exp3_mixing_weight, exp3_policy, Exp3Agent};
pub use fixed::StaticAgent;
pub use ofulinmat::{optimistic_matrix, OfulinmatAgent, OptimisticMatrix, PlanDiagnostics};
pub use opponent::{opponent_strategy, Opponent, OpponentPolicy};

use crate::environment::ExpertEnsemble;
use crate::error::Result;
use crate::game::MixedStrategy;

/// Episodic agent contract for the row player.
///
/// Agents see the expert ensemble and their own rewards, never the true game.
pub trait Agent: Send {
    fn name(&self) -> &str;

    fn begin_episode(&mut self, ensemble: &ExpertEnsemble) -> Result<()>;

    /// Chooses the row for round `t` (1-based within the episode).
    fn act(&mut self, t: usize) -> Result<usize>;

    /// Mixed strategy the most recent action was drawn from.
    fn current_policy(&self) -> Option<&MixedStrategy>;

    fn observe(&mut self, own: usize, opponent: usize, reward: f64) -> Result<()>;

    fn end_episode(&mut self) -> Result<()>;

    /// Planning state of the current episode, for agents that plan.
    fn plan_diagnostics(&self) -> Option<PlanDiagnostics> {
        None
    }
}
