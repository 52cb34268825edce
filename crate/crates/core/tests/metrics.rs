use ofulinmat::environment::{run_trial, true_games, Environment, EnvironmentConfig, ExpertSpec, ThetaStarSpec};
use ofulinmat::learners::{Exp3Agent, OfulinmatAgent, Opponent, OpponentPolicy, StaticAgent};
use ofulinmat::metrics::{coverage_series, prefix_sums, regret_report};
use ofulinmat::rng::StreamRng;
use ofulinmat::{EstimatorConfig, MixedStrategy};
use rand::SeedableRng;

fn env(seed: u64) -> Environment {
    Environment::generate(
        EnvironmentConfig {
            rows: 5,
            cols: 5,
            experts: 4,
            episodes: 8,
            rounds: 40,
            noise_variance: 0.5,
            theta_star: ThetaStarSpec::Gaussian {
                mean: 0.5,
                norm_bound: Some(3.0),
            },
            expert_games: ExpertSpec::Uniform,
        },
        seed,
    )
    .unwrap()
}

fn opponents() -> Vec<OpponentPolicy> {
    vec![
        OpponentPolicy::SaddleOracle,
        OpponentPolicy::Uniform,
        OpponentPolicy::BestResponder,
        OpponentPolicy::Fixed {
            strategy: vec![0.0, 0.0, 1.0, 0.0, 0.0],
        },
    ]
}

#[test]
fn pseudo_regret_below_best_response_below_exploitability() {
    for seed in 0..5 {
        let env = env(seed);
        let games = true_games(&env).unwrap();
        for policy in opponents() {
            let mut learners: Vec<Box<dyn ofulinmat::learners::Agent>> = vec![
                Box::new(
                    OfulinmatAgent::with_seed(
                        EstimatorConfig {
                            lambda: 0.1,
                            bound: 3.0,
                            delta: 0.01,
                            experts: 4,
                        },
                        seed,
                    )
                    .unwrap(),
                ),
                Box::new(Exp3Agent::new(5, (-10.0, 10.0), StreamRng::seed_from_u64(seed)).unwrap()),
                Box::new(StaticAgent::uniform(5, StreamRng::seed_from_u64(seed)).unwrap()),
            ];
            for learner in learners.iter_mut() {
                let mut opp = Opponent::new(policy.clone(), StreamRng::seed_from_u64(100 + seed));
                let trace = run_trial(&env, learner.as_mut(), &mut opp).unwrap();
                let report = regret_report(&trace, &games).unwrap();
                for k in 0..8 {
                    let sr = report.pseudo_saddle_point_regret[k];
                    let br1 = report.best_response_regret_p1[k];
                    let er = report.exploitability_regret[k];
                    assert!(sr <= br1 + 1e-9, "{sr} > {br1}");
                    assert!(br1 <= er + 1e-9);
                    assert!(report.best_response_regret_p2[k] >= -1e-9);
                }
                let cum_er = report.cumulative_exploitability();
                let cum = |v: &[f64]| prefix_sums(v);
                for k in 0..8 {
                    assert_eq!(
                        cum_er[k],
                        cum(&report.best_response_regret_p1)[k] + cum(&report.best_response_regret_p2)[k]
                    );
                }
            }
        }
    }
}

#[test]
fn saddle_attacker_makes_pseudo_regret_nonnegative() {
    // against the minimax column, mu^T M nu* <= val for every mu
    let env = env(9);
    let games = true_games(&env).unwrap();
    let mut agent = StaticAgent::uniform(5, StreamRng::seed_from_u64(0)).unwrap();
    let mut opp = Opponent::new(OpponentPolicy::SaddleOracle, StreamRng::seed_from_u64(1));
    let trace = run_trial(&env, &mut agent, &mut opp).unwrap();
    let report = regret_report(&trace, &games).unwrap();
    assert!(report.pseudo_saddle_point_regret.iter().all(|v| *v >= -1e-9));
    assert!(report.theta_error.is_none());
    assert!(coverage_series(&trace).is_none());
}

#[test]
fn maximin_player_has_zero_pseudo_regret() {
    let env = env(4);
    let games = true_games(&env).unwrap();
    // a learner that plays the true maximin strategy each episode
    struct Oracle {
        games: Vec<ofulinmat::GameMatrix>,
        k: usize,
        s: Option<MixedStrategy>,
        rng: StreamRng,
    }
    impl ofulinmat::learners::Agent for Oracle {
        fn name(&self) -> &str {
            "oracle"
        }
        fn begin_episode(&mut self, _: &ofulinmat::environment::ExpertEnsemble) -> ofulinmat::Result<()> {
            self.s = Some(ofulinmat::solve_saddle_point(&self.games[self.k])?.row_strategy);
            Ok(())
        }
        fn act(&mut self, _: usize) -> ofulinmat::Result<usize> {
            Ok(self.s.as_ref().unwrap().sample(&mut self.rng))
        }
        fn current_policy(&self) -> Option<&MixedStrategy> {
            self.s.as_ref()
        }
        fn observe(&mut self, _: usize, _: usize, _: f64) -> ofulinmat::Result<()> {
            Ok(())
        }
        fn end_episode(&mut self) -> ofulinmat::Result<()> {
            self.k += 1;
            Ok(())
        }
    }
    let mut agent = Oracle {
        games: games.clone(),
        k: 0,
        s: None,
        rng: StreamRng::seed_from_u64(0),
    };
    let mut opp = Opponent::new(OpponentPolicy::SaddleOracle, StreamRng::seed_from_u64(1));
    let trace = run_trial(&env, &mut agent, &mut opp).unwrap();
    let report = regret_report(&trace, &games).unwrap();
    for v in &report.pseudo_saddle_point_regret {
        assert!(v.abs() < 1e-6, "{v}");
    }
}

#[test]
fn optimistic_learner_reports_theta_error_and_coverage() {
    let env = env(2);
    let games = true_games(&env).unwrap();
    let mut agent = OfulinmatAgent::with_seed(
        EstimatorConfig {
            lambda: 0.1,
            bound: 3.0,
            delta: 0.01,
            experts: 4,
        },
        0,
    )
    .unwrap();
    let mut opp = Opponent::new(OpponentPolicy::SaddleOracle, StreamRng::seed_from_u64(1));
    let trace = run_trial(&env, &mut agent, &mut opp).unwrap();
    let report = regret_report(&trace, &games).unwrap();
    let err = report.theta_error.unwrap();
    let norm = env.theta_star().iter().map(|v| v * v).sum::<f64>().sqrt();
    assert!((err[0] - norm).abs() < 1e-12, "first plan uses theta_hat = 0");
    assert!(err[7] < err[0]);
    assert_eq!(coverage_series(&trace).unwrap().len(), 8);
    assert!(regret_report(&trace, &games[..3]).is_err());
}
