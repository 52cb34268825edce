use rand::SeedableRng;
use serde::{Deserialize, Serialize};

use crate::environment::ExpertEnsemble;
use crate::error::{Error, Result};
use crate::estimator::{EstimatorConfig, RidgeEstimator};
use crate::game::{solve_saddle_point, GameMatrix, MixedStrategy};
use crate::rng::StreamRng;

use super::Agent;

/// Optimistic game built from the confidence ellipsoid.
#[derive(Debug, Clone)]
pub struct OptimisticMatrix {
    pub matrix: GameMatrix,
    pub theta_hat: Vec<f64>,
    pub beta: f64,
    pub log_det: f64,
    /// Entries where the parameter-ball bound `B ||z||` was tighter than the
    /// ellipsoid bound.
    pub cap_activations: usize,
}

/// Entrywise upper confidence bound on the game induced by `ensemble`:
/// `min( <theta_hat, z> + sqrt(beta) ||z||_{V^-1},  B ||z|| )`.
///
/// Both terms upper-bound `<theta, z>` over the confidence set intersected
/// with the parameter ball, so the entry dominates `<theta*, z>` whenever the
/// ellipsoid covers `theta*`.
pub fn optimistic_matrix(estimator: &RidgeEstimator, ensemble: &ExpertEnsemble) -> Result<OptimisticMatrix> {
    if ensemble.experts() != estimator.dim() {
        return Err(Error::DimensionMismatch {
            what: "expert ensemble",
            expected: estimator.dim(),
            found: ensemble.experts(),
        });
    }
    let factor = estimator.factor()?;
    let theta_hat = estimator.point_estimate_with(&factor);
    let beta = estimator.beta_radius_with(&factor);
    let radius = beta.sqrt();
    let bound = estimator.config().bound;
    let mut cap_activations = 0;
    let entries = ensemble
        .feature_table()
        .iter()
        .map(|z| {
            let mean: f64 = theta_hat.iter().zip(z).map(|(a, b)| a * b).sum();
            let ucb = mean + radius * factor.inverse_quadratic(z).sqrt();
            let cap = bound * z.iter().map(|v| v * v).sum::<f64>().sqrt();
            if cap < ucb {
                cap_activations += 1;
                cap
            } else {
                ucb
            }
        })
        .collect();
    Ok(OptimisticMatrix {
        matrix: GameMatrix::new(ensemble.rows(), ensemble.cols(), entries)?,
        theta_hat,
        beta,
        log_det: factor.log_det(),
        cap_activations,
    })
}

/// Per-episode planning record of the optimistic learner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlanDiagnostics {
    pub theta_hat: Vec<f64>,
    pub beta: f64,
    pub log_det: f64,
    /// `det V_{k-1} / det V_{k-2}`; 1 in the first episode.
    pub det_ratio: f64,
    pub n_obs: usize,
    pub optimistic_value: f64,
    pub cap_activations: usize,
    pub potential_sum: f64,
    pub potential_bound: f64,
    pub strategy: Vec<f64>,
    pub optimistic_game: Vec<f64>,
    /// Row-major `V_{k-1}` the plan was computed from.
    pub gram: Vec<f64>,
}

/// Optimism-in-the-face-of-uncertainty learner for linearly mixed expert
/// games. The strategy is planned once per episode and held fixed for all
/// of its rounds; observations are buffered and absorbed at episode end.
#[derive(Debug, Clone)]
pub struct OfulinmatAgent {
    name: String,
    estimator: RidgeEstimator,
    rng: StreamRng,
    features: Vec<Vec<f64>>,
    cols: usize,
    strategy: Option<MixedStrategy>,
    optimistic: Option<GameMatrix>,
    diagnostics: Option<PlanDiagnostics>,
    buffer: Vec<(Vec<f64>, f64)>,
    previous_log_det: Option<f64>,
    awaiting_observation: bool,
}

impl OfulinmatAgent {
    pub fn new(config: EstimatorConfig, rng: StreamRng) -> Result<Self> {
        Ok(Self {
            name: "ofulinmat".into(),
            estimator: RidgeEstimator::new(config)?,
            rng,
            features: Vec::new(),
            cols: 0,
            strategy: None,
            optimistic: None,
            diagnostics: None,
            buffer: Vec::new(),
            previous_log_det: None,
            awaiting_observation: false,
        })
    }

    pub fn with_seed(config: EstimatorConfig, seed: u64) -> Result<Self> {
        Self::new(config, StreamRng::seed_from_u64(seed))
    }

    pub fn named(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn estimator(&self) -> &RidgeEstimator {
        &self.estimator
    }

    pub fn optimistic_game(&self) -> Option<&GameMatrix> {
        self.optimistic.as_ref()
    }

    pub fn buffered(&self) -> usize {
        self.buffer.len()
    }

    /// Estimates the weights, builds the optimistic game and fixes the
    /// episode strategy to its maximin row strategy.
    pub fn plan_episode(&mut self, ensemble: &ExpertEnsemble) -> Result<&MixedStrategy> {
        let plan = optimistic_matrix(&self.estimator, ensemble)?;
        let saddle = solve_saddle_point(&plan.matrix)?;
        let det_ratio = match self.previous_log_det {
            Some(prev) => (plan.log_det - prev).exp(),
            None => 1.0,
        };
        self.previous_log_det = Some(plan.log_det);
        self.features = ensemble.feature_table();
        self.cols = ensemble.cols();
        self.buffer.clear();
        self.diagnostics = Some(PlanDiagnostics {
            theta_hat: plan.theta_hat,
            beta: plan.beta,
            log_det: plan.log_det,
            det_ratio,
            n_obs: self.estimator.n_obs(),
            optimistic_value: saddle.value,
            cap_activations: plan.cap_activations,
            potential_sum: self.estimator.potential_sum(),
            potential_bound: 2.0 * (plan.log_det - self.estimator.initial_log_det()),
            strategy: saddle.row_strategy.probs().to_vec(),
            optimistic_game: plan.matrix.entries().to_vec(),
            gram: self.estimator.gram().transpose().as_slice().to_vec(),
        });
        self.optimistic = Some(plan.matrix);
        Ok(self.strategy.insert(saddle.row_strategy))
    }
}

impl Agent for OfulinmatAgent {
    fn name(&self) -> &str {
        &self.name
    }

    fn begin_episode(&mut self, ensemble: &ExpertEnsemble) -> Result<()> {
        self.plan_episode(ensemble).map(|_| ())
    }

    fn act(&mut self, _t: usize) -> Result<usize> {
        let strategy = self
            .strategy
            .as_ref()
            .ok_or(Error::Protocol("act called before the episode was planned"))?;
        self.awaiting_observation = true;
        Ok(strategy.sample(&mut self.rng))
    }

    fn current_policy(&self) -> Option<&MixedStrategy> {
        self.strategy.as_ref()
    }

    fn observe(&mut self, own: usize, opponent: usize, reward: f64) -> Result<()> {
        if !self.awaiting_observation {
            return Err(Error::Protocol("observe called without a pending action"));
        }
        let idx = own * self.cols + opponent;
        let z = self
            .features
            .get(idx)
            .filter(|_| opponent < self.cols)
            .ok_or(Error::IndexOutOfRange {
                what: "game entries",
                index: idx,
                size: self.features.len(),
            })?
            .clone();
        if !reward.is_finite() {
            return Err(Error::NonFinite { what: "reward" });
        }
        self.buffer.push((z, reward));
        self.awaiting_observation = false;
        Ok(())
    }

    fn end_episode(&mut self) -> Result<()> {
        let buffer = std::mem::take(&mut self.buffer);
        self.estimator.absorb_batch(&buffer)?;
        let (sum, bound) = (self.estimator.potential_sum(), self.estimator.potential_bound()?);
        if sum > bound {
            return Err(Error::Invariant(format!(
                "elliptical potential {sum} exceeds 2 ln(det V / det V0) = {bound}"
            )));
        }
        self.strategy = None;
        self.awaiting_observation = false;
        Ok(())
    }

    fn plan_diagnostics(&self) -> Option<PlanDiagnostics> {
        self.diagnostics.clone()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn config(experts: usize) -> EstimatorConfig {
        EstimatorConfig {
            lambda: 1.0,
            bound: 1.0,
            delta: 0.5,
            experts,
        }
    }

    fn ensemble(matrices: Vec<GameMatrix>) -> ExpertEnsemble {
        ExpertEnsemble::new(matrices, 0).unwrap()
    }

    #[test]
    fn constant_expert_gives_constant_optimistic_game() {
        let ones = GameMatrix::new(3, 3, vec![1.0; 9]).unwrap();
        let mut agent = OfulinmatAgent::with_seed(config(1), 0).unwrap();
        let ens = ensemble(vec![ones]);
        let strategy = agent.plan_episode(&ens).unwrap().clone();
        let game = agent.optimistic_game().unwrap();
        assert!(game.entries().iter().all(|v| (v - game.get(0, 0)).abs() < 1e-15));
        assert_eq!(strategy.len(), 3);
    }

    #[test]
    fn act_requires_planning_and_observe_requires_act() {
        let mut agent = OfulinmatAgent::with_seed(config(1), 0).unwrap();
        assert!(matches!(agent.act(1), Err(Error::Protocol(_))));
        assert!(matches!(agent.observe(0, 0, 1.0), Err(Error::Protocol(_))));
        let ens = ensemble(vec![GameMatrix::new(2, 2, vec![0.5; 4]).unwrap()]);
        agent.begin_episode(&ens).unwrap();
        let a = agent.act(1).unwrap();
        assert!(agent.observe(a, 5, 1.0).is_err());
    }

    #[test]
    fn wrong_ensemble_size_is_rejected() {
        let mut agent = OfulinmatAgent::with_seed(config(2), 0).unwrap();
        let ens = ensemble(vec![GameMatrix::new(2, 2, vec![0.5; 4]).unwrap()]);
        assert!(matches!(agent.plan_episode(&ens), Err(Error::DimensionMismatch { .. })));
    }

    #[test]
    fn end_episode_with_empty_buffer_leaves_estimator_alone() {
        let mut agent = OfulinmatAgent::with_seed(config(1), 0).unwrap();
        let ens = ensemble(vec![GameMatrix::new(2, 2, vec![0.5; 4]).unwrap()]);
        agent.begin_episode(&ens).unwrap();
        let before = agent.estimator().gram().clone();
        agent.end_episode().unwrap();
        assert_eq!(agent.estimator().gram(), &before);
        assert_eq!(agent.estimator().n_obs(), 0);
    }

    #[test]
    fn single_observation_matches_single_absorb() {
        let mut agent = OfulinmatAgent::with_seed(config(2), 0).unwrap();
        let m1 = GameMatrix::from_rows(&[[0.2, 0.9], [0.4, 0.1]]).unwrap();
        let m2 = GameMatrix::from_rows(&[[0.7, 0.3], [0.6, 0.8]]).unwrap();
        let ens = ensemble(vec![m1, m2]);
        agent.begin_episode(&ens).unwrap();
        let row = agent.act(1).unwrap();
        agent.observe(row, 1, 0.75).unwrap();
        agent.end_episode().unwrap();

        let mut direct = RidgeEstimator::new(config(2)).unwrap();
        direct.absorb(&ens.features(row, 1), 0.75).unwrap();
        assert_eq!(agent.estimator().gram(), direct.gram());
        assert_eq!(agent.estimator().moments(), direct.moments());
    }

    #[test]
    fn pure_strategy_always_plays_its_row() {
        // row 1 strictly dominates in the only expert game, and the cap makes
        // the optimistic game proportional to ||z||
        let m = GameMatrix::from_rows(&[[0.1, 0.2], [0.9, 0.8]]).unwrap();
        let mut agent = OfulinmatAgent::with_seed(config(1), 3).unwrap();
        let ens = ensemble(vec![m]);
        let s = agent.plan_episode(&ens).unwrap().clone();
        assert_eq!(s.probs(), &[0.0, 1.0]);
        for t in 1..=50 {
            assert_eq!(agent.act(t).unwrap(), 1);
            agent.observe(1, 0, 0.9).unwrap();
        }
    }
}
