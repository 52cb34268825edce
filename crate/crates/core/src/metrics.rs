//! Regret notions and estimation-error trajectories computed from traces and
//! the ground truth.
//!
//! "Expectation form" metrics use the mixed strategies in force
//! (`mu_t^T M nu_t`); "realized" forms use the noisy reward `r_t`. Only the
//! expectation forms obey `SR <= BR <= ER` pathwise.

use serde::Serialize;

use crate::environment::{EpisodeTrace, TrialTrace};
use crate::error::{Error, Result};
use crate::game::{bilinear, GameMatrix, MixedStrategy};

/// `val(M) - r_t`.
pub fn saddle_point_regret_increment(value: f64, reward: f64) -> f64 {
    value - reward
}

/// `val(M) - mu^T M nu`.
pub fn pseudo_saddle_point_regret_increment(
    value: f64,
    mu: &MixedStrategy,
    m: &GameMatrix,
    nu: &MixedStrategy,
) -> Result<f64> {
    Ok(value - crate::game::expected_payoff(m, mu, nu)?)
}

/// Row player's `max_i (M nu)_i - r`.
pub fn best_response_regret_increment(m: &GameMatrix, nu: &MixedStrategy, reward: f64) -> Result<f64> {
    Ok(crate::game::best_response_value(m, nu, crate::game::Side::Row)? - reward)
}

/// Column player's mirror `r - min_j (mu^T M)_j`.
pub fn column_best_response_regret_increment(m: &GameMatrix, mu: &MixedStrategy, reward: f64) -> Result<f64> {
    Ok(reward - crate::game::best_response_value(m, mu, crate::game::Side::Col)?)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExternalRegret {
    /// `max_i sum_t M_{i, j_t} - sum_t r_t` for each episode.
    pub per_episode: Vec<f64>,
    /// `max_i sum_k sum_t M^(k)_{i, j_t} - sum_k sum_t r_t`: one row for the
    /// whole run.
    pub single_best_row: f64,
}

pub fn external_regret(episodes: &[EpisodeTrace], games: &[GameMatrix]) -> Result<ExternalRegret> {
    check_games(episodes, games)?;
    let rows = games.first().map_or(0, GameMatrix::rows);
    let mut per_episode = Vec::with_capacity(episodes.len());
    let mut overall = vec![0.0; rows];
    let mut total_reward = 0.0;
    for (ep, game) in episodes.iter().zip(games) {
        if game.rows() != rows {
            return Err(Error::DimensionMismatch {
                what: "rows across episodes",
                expected: rows,
                found: game.rows(),
            });
        }
        let mut hindsight = vec![0.0; rows];
        let mut reward = 0.0;
        for rec in &ep.rounds {
            for (i, h) in hindsight.iter_mut().enumerate() {
                *h += game.get(i, rec.col);
            }
            reward += rec.reward;
        }
        for (o, h) in overall.iter_mut().zip(&hindsight) {
            *o += h;
        }
        total_reward += reward;
        per_episode.push(max(&hindsight) - reward);
    }
    Ok(ExternalRegret {
        per_episode,
        single_best_row: max(&overall) - total_reward,
    })
}

fn max(v: &[f64]) -> f64 {
    v.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}

fn check_games(episodes: &[EpisodeTrace], games: &[GameMatrix]) -> Result<()> {
    if episodes.len() != games.len() {
        return Err(Error::DimensionMismatch {
            what: "true games per episode",
            expected: episodes.len(),
            found: games.len(),
        });
    }
    Ok(())
}

/// Per-episode regret series for one learner in one trial. Cumulative series
/// are their prefix sums.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RegretReport {
    pub saddle_point_regret: Vec<f64>,
    pub pseudo_saddle_point_regret: Vec<f64>,
    pub best_response_regret_p1: Vec<f64>,
    pub best_response_regret_p2: Vec<f64>,
    pub exploitability_regret: Vec<f64>,
    pub realized_best_response_regret_p1: Vec<f64>,
    pub realized_best_response_regret_p2: Vec<f64>,
    pub realized_exploitability_regret: Vec<f64>,
    pub external_regret: ExternalRegret,
    /// `||theta_hat^(k) - theta*||_2`, for learners that estimate.
    pub theta_error: Option<Vec<f64>>,
}

pub fn prefix_sums(v: &[f64]) -> Vec<f64> {
    v.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

impl RegretReport {
    pub fn episodes(&self) -> usize {
        self.pseudo_saddle_point_regret.len()
    }

    pub fn cumulative_exploitability(&self) -> Vec<f64> {
        add(&prefix_sums(&self.best_response_regret_p1), &prefix_sums(&self.best_response_regret_p2))
    }

    pub fn cumulative_realized_exploitability(&self) -> Vec<f64> {
        add(
            &prefix_sums(&self.realized_best_response_regret_p1),
            &prefix_sums(&self.realized_best_response_regret_p2),
        )
    }

    /// Every named series in a fixed order, per-episode followed by its
    /// `_cumulative` counterpart.
    pub fn series(&self) -> Vec<(String, Vec<f64>)> {
        let mut out = Vec::new();
        let mut push = |name: &str, per: &[f64], cumulative: Vec<f64>| {
            out.push((name.to_string(), per.to_vec()));
            out.push((format!("{name}_cumulative"), cumulative));
        };
        push("saddle_point_regret", &self.saddle_point_regret, prefix_sums(&self.saddle_point_regret));
        push(
            "pseudo_saddle_point_regret",
            &self.pseudo_saddle_point_regret,
            prefix_sums(&self.pseudo_saddle_point_regret),
        );
        push(
            "best_response_regret_p1",
            &self.best_response_regret_p1,
            prefix_sums(&self.best_response_regret_p1),
        );
        push(
            "best_response_regret_p2",
            &self.best_response_regret_p2,
            prefix_sums(&self.best_response_regret_p2),
        );
        push("exploitability_regret", &self.exploitability_regret, self.cumulative_exploitability());
        push(
            "realized_best_response_regret_p1",
            &self.realized_best_response_regret_p1,
            prefix_sums(&self.realized_best_response_regret_p1),
        );
        push(
            "realized_best_response_regret_p2",
            &self.realized_best_response_regret_p2,
            prefix_sums(&self.realized_best_response_regret_p2),
        );
        push(
            "realized_exploitability_regret",
            &self.realized_exploitability_regret,
            self.cumulative_realized_exploitability(),
        );
        push(
            "external_regret",
            &self.external_regret.per_episode,
            prefix_sums(&self.external_regret.per_episode),
        );
        if let Some(err) = &self.theta_error {
            out.push(("theta_error".to_string(), err.clone()));
        }
        out
    }
}

fn add(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x + y).collect()
}

/// Computes every regret notion for one trial.
pub fn regret_report(trace: &TrialTrace, games: &[GameMatrix]) -> Result<RegretReport> {
    check_games(&trace.episodes, games)?;
    let k = trace.episodes.len();
    let mut report = RegretReport {
        saddle_point_regret: Vec::with_capacity(k),
        pseudo_saddle_point_regret: Vec::with_capacity(k),
        best_response_regret_p1: Vec::with_capacity(k),
        best_response_regret_p2: Vec::with_capacity(k),
        exploitability_regret: Vec::with_capacity(k),
        realized_best_response_regret_p1: Vec::with_capacity(k),
        realized_best_response_regret_p2: Vec::with_capacity(k),
        realized_exploitability_regret: Vec::with_capacity(k),
        external_regret: external_regret(&trace.episodes, games)?,
        theta_error: None,
    };
    let mut theta_error = Vec::with_capacity(k);
    for (ep, game) in trace.episodes.iter().zip(games) {
        let nu = &ep.opponent_strategy;
        if nu.len() != game.cols() {
            return Err(Error::DimensionMismatch {
                what: "opponent strategy",
                expected: game.cols(),
                found: nu.len(),
            });
        }
        let row_payoffs = game.row_payoffs(nu);
        let best_row = max(&row_payoffs);
        let (mut sr, mut psr, mut br1, mut br2, mut rbr1, mut rbr2) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for (rec, mu) in ep.rounds.iter().zip(&ep.learner_policies) {
            if mu.len() != game.rows() {
                return Err(Error::DimensionMismatch {
                    what: "learner policy",
                    expected: game.rows(),
                    found: mu.len(),
                });
            }
            let expected = bilinear(game, mu, nu);
            let worst_col = game
                .col_payoffs(mu)
                .into_iter()
                .fold(f64::INFINITY, f64::min);
            sr += saddle_point_regret_increment(ep.value, rec.reward);
            psr += ep.value - expected;
            br1 += best_row - expected;
            br2 += expected - worst_col;
            rbr1 += best_row - rec.reward;
            rbr2 += rec.reward - worst_col;
        }
        report.saddle_point_regret.push(sr);
        report.pseudo_saddle_point_regret.push(psr);
        report.best_response_regret_p1.push(br1);
        report.best_response_regret_p2.push(br2);
        report.exploitability_regret.push(br1 + br2);
        report.realized_best_response_regret_p1.push(rbr1);
        report.realized_best_response_regret_p2.push(rbr2);
        report.realized_exploitability_regret.push(rbr1 + rbr2);
        if let Some(plan) = &ep.planning {
            let err: f64 = plan
                .theta_hat
                .iter()
                .zip(&trace.theta_star)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            theta_error.push(err);
        }
    }
    if theta_error.len() == k && k > 0 {
        report.theta_error = Some(theta_error);
    }
    Ok(report)
}

/// Whether `theta*` lies in the planning ellipsoid
/// `||theta* - theta_hat||^2_V <= beta` of each planned episode.
pub fn coverage_series(trace: &TrialTrace) -> Option<Vec<bool>> {
    trace
        .episodes
        .iter()
        .map(|ep| {
            let plan = ep.planning.as_ref()?;
            let s = plan.theta_hat.len();
            let d: Vec<f64> = trace
                .theta_star
                .iter()
                .zip(&plan.theta_hat)
                .map(|(a, b)| a - b)
                .collect();
            let mut q = 0.0;
            for i in 0..s {
                for j in 0..s {
                    q += d[i] * plan.gram[i * s + j] * d[j];
                }
            }
            Some(q <= plan.beta)
        })
        .collect()
}

/// Planner diagnostics as named per-episode series.
pub fn diagnostic_series(trace: &TrialTrace) -> Vec<(String, Vec<f64>)> {
    let mut out = vec![(
        "game_value".to_string(),
        trace.episodes.iter().map(|e| e.value).collect::<Vec<_>>(),
    )];
    let plans: Option<Vec<_>> = trace.episodes.iter().map(|e| e.planning.as_ref()).collect();
    let Some(plans) = plans else {
        return out;
    };
    let mut push = |name: &str, f: &dyn Fn(&crate::learners::PlanDiagnostics) -> f64| {
        out.push((name.to_string(), plans.iter().map(|p| f(p)).collect()));
    };
    push("beta", &|p| p.beta);
    push("log_det", &|p| p.log_det);
    push("det_ratio", &|p| p.det_ratio);
    push("optimistic_value", &|p| p.optimistic_value);
    push("cap_activations", &|p| p.cap_activations as f64);
    push("potential_sum", &|p| p.potential_sum);
    push("potential_bound", &|p| p.potential_bound);
    if let Some(cov) = coverage_series(trace) {
        out.push(("coverage".to_string(), cov.into_iter().map(|c| f64::from(u8::from(c))).collect()));
    }
    out
}
