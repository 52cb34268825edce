//! Simulation of episodic zero-sum matrix games whose payoff matrix is an
//! unknown linear mix of expert games revealed each episode.
//!
//! The row player learns the mixing weights by regularized least squares and
//! plays the maximin strategy of an optimistic game built from the confidence
//! ellipsoid. An Exp3 baseline, several opponents, regret metrics and a
//! reproducible multi-trial harness are included.

pub mod environment;
pub mod error;
pub mod estimator;
pub mod game;
pub mod harness;
pub mod learners;
pub mod metrics;
pub mod rng;

pub use error::{Error, Result};
pub use estimator::{EstimatorConfig, RidgeEstimator};
pub use game::{solve_saddle_point, GameMatrix, MixedStrategy, SaddlePoint};
pub use harness::{default_paper_config, ExperimentConfig, RunManifest};
