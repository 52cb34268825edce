//! Zero-sum matrix games: payoff matrices, mixed strategies and exact
//! saddle-point computation.
//!
//! The row player maximizes, the column player minimizes. Saddle points are
//! found by a dense tableau simplex on the standard zero-sum LP, using
//! Bland's rule so that degenerate (integer-valued, constant, ...) games
//! always terminate.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used when comparing game values and security levels.
pub const VALUE_TOLERANCE: f64 = 1e-7;
/// Tolerance on the simplex constraint of a mixed strategy, and the pivot
/// tolerance of the simplex solver.
pub const SIMPLEX_TOLERANCE: f64 = 1e-9;

const MAX_PIVOTS: usize = 100_000;

/// Dense `rows x cols` payoff matrix for the row player, stored row-major.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameMatrix {
    rows: usize,
    cols: usize,
    entries: Vec<f64>,
}

impl GameMatrix {
    pub fn new(rows: usize, cols: usize, entries: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::config("shape", "a game needs at least one row and one column"));
        }
        if entries.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                what: "game matrix entries",
                expected: rows * cols,
                found: entries.len(),
            });
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "game matrix" });
        }
        Ok(Self { rows, cols, entries })
    }

    /// Builds a matrix from a list of equally long rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let cols = rows.first().map(|r| r.as_ref().len()).unwrap_or(0);
        let mut entries = Vec::with_capacity(rows.len() * cols);
        for row in rows {
            let row = row.as_ref();
            if row.len() != cols {
                return Err(Error::DimensionMismatch {
                    what: "game matrix row",
                    expected: cols,
                    found: row.len(),
                });
            }
            entries.extend_from_slice(row);
        }
        Self::new(rows.len(), cols, entries)
    }

    pub fn zeros(rows: usize, cols: usize) -> Result<Self> {
        Self::new(rows, cols, vec![0.0; rows * cols])
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.cols + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.entries[i * self.cols..(i + 1) * self.cols]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.entries.chunks(self.cols).map(<[f64]>::to_vec).collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_entry(&self) -> f64 {
        self.entries.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Returns `M + c` entrywise.
    pub fn shifted(&self, c: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.entries.iter().map(|v| v + c).collect())
    }

    /// Returns `c * M` entrywise.
    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.rows, self.cols, self.entries.iter().map(|v| v * c).collect())
    }

    /// `(M nu)_i` for every row `i`.
    pub fn row_payoffs(&self, nu: &[f64]) -> Vec<f64> {
        debug_assert_eq!(nu.len(), self.cols);
        self.entries
            .chunks(self.cols)
            .map(|row| row.iter().zip(nu).map(|(m, p)| m * p).sum())
            .collect()
    }

    /// `(mu^T M)_j` for every column `j`.
    pub fn col_payoffs(&self, mu: &[f64]) -> Vec<f64> {
        debug_assert_eq!(mu.len(), self.rows);
        let mut out = vec![0.0; self.cols];
        for (row, p) in self.entries.chunks(self.cols).zip(mu) {
            for (o, m) in out.iter_mut().zip(row) {
                *o += p * m;
            }
        }
        out
    }
}

/// Probability vector over a finite action set.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct MixedStrategy(Vec<f64>);

impl MixedStrategy {
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidStrategy("empty action set".into()));
        }
        if probs.iter().any(|p| !p.is_finite()) {
            return Err(Error::NonFinite { what: "mixed strategy" });
        }
        if let Some(p) = probs.iter().find(|p| **p < 0.0) {
            return Err(Error::InvalidStrategy(format!("negative probability {p}")));
        }
        let total: f64 = probs.iter().sum();
        if (total - 1.0).abs() > SIMPLEX_TOLERANCE {
            return Err(Error::InvalidStrategy(format!("probabilities sum to {total}")));
        }
        Ok(Self(probs))
    }

    pub fn uniform(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidStrategy("empty action set".into()));
        }
        Ok(Self(vec![1.0 / n as f64; n]))
    }

    pub fn pure(n: usize, action: usize) -> Result<Self> {
        if action >= n {
            return Err(Error::IndexOutOfRange {
                what: "action set",
                index: action,
                size: n,
            });
        }
        let mut probs = vec![0.0; n];
        probs[action] = 1.0;
        Ok(Self(probs))
    }

    /// Clamps tiny negative components left by floating-point pivoting and
    /// renormalizes.
    fn from_lp_solution(mut probs: Vec<f64>) -> Result<Self> {
        for p in &mut probs {
            if *p < 0.0 {
                if *p < -SIMPLEX_TOLERANCE {
                    return Err(Error::Solver(format!("negative strategy component {p}")));
                }
                *p = 0.0;
            }
        }
        let total: f64 = probs.iter().sum();
        if total <= 0.0 {
            return Err(Error::Solver("degenerate strategy with zero mass".into()));
        }
        probs.iter_mut().for_each(|p| *p /= total);
        Self::new(probs)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    /// Draws one action index.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        match WeightedIndex::new(&self.0) {
            Ok(dist) => dist.sample(rng),
            // unreachable for a validated strategy: some weight is positive
            Err(_) => 0,
        }
    }
}

impl TryFrom<Vec<f64>> for MixedStrategy {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<MixedStrategy> for Vec<f64> {
    fn from(value: MixedStrategy) -> Self {
        value.0
    }
}

impl AsRef<[f64]> for MixedStrategy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

/// Which player a best response is computed for.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Row,
    Col,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddlePoint {
    pub row_strategy: MixedStrategy,
    pub col_strategy: MixedStrategy,
    pub value: f64,
}

/// `mu^T M nu`.
pub fn expected_payoff(m: &GameMatrix, mu: &MixedStrategy, nu: &MixedStrategy) -> Result<f64> {
    check_len("row strategy", m.rows(), mu.len())?;
    check_len("column strategy", m.cols(), nu.len())?;
    Ok(bilinear(m, mu.probs(), nu.probs()))
}

pub(crate) fn bilinear(m: &GameMatrix, mu: &[f64], nu: &[f64]) -> f64 {
    m.row_payoffs(nu).iter().zip(mu).map(|(a, p)| a * p).sum()
}

/// Value of the best pure response against `opponent`.
///
/// With `Side::Row` the opponent is the column player and the result is
/// `max_i (M nu)_i`; with `Side::Col` it is `min_j (mu^T M)_j`.
pub fn best_response_value(m: &GameMatrix, opponent: &MixedStrategy, side: Side) -> Result<f64> {
    best_response(m, opponent, side).map(|(_, v)| v)
}

/// Like [`best_response_value`], also returning the first index attaining it.
pub fn best_response(m: &GameMatrix, opponent: &MixedStrategy, side: Side) -> Result<(usize, f64)> {
    let payoffs = match side {
        Side::Row => {
            check_len("column strategy", m.cols(), opponent.len())?;
            m.row_payoffs(opponent.probs())
        }
        Side::Col => {
            check_len("row strategy", m.rows(), opponent.len())?;
            m.col_payoffs(opponent.probs())
        }
    };
    let better = |a: f64, b: f64| match side {
        Side::Row => a > b,
        Side::Col => a < b,
    };
    let mut best = (0, payoffs[0]);
    for (k, &v) in payoffs.iter().enumerate().skip(1) {
        if better(v, best.1) {
            best = (k, v);
        }
    }
    Ok(best)
}

fn check_len(what: &'static str, expected: usize, found: usize) -> Result<()> {
    if expected != found {
        return Err(Error::DimensionMismatch { what, expected, found });
    }
    Ok(())
}

/// Positivity shift applied before the LP transformation.
pub fn positivity_shift(m: &GameMatrix) -> f64 {
    let min = m.min_entry();
    if min <= 0.0 {
        1.0 + min.abs()
    } else {
        0.0
    }
}

/// Exact mixed-strategy saddle point of a zero-sum game.
///
/// With `A = M + c > 0`, the normalized LP `max 1^T y  s.t.  A y <= 1, y >= 0`
/// has optimum `1 / val(A)`. The column strategy is `y / 1^T y` and the row
/// strategy is read from the optimal dual prices of the `n1` constraints,
/// which solve the row player's program `max v  s.t.  A^T mu >= v 1`.
pub fn solve_saddle_point(m: &GameMatrix) -> Result<SaddlePoint> {
    if m.entries().iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite { what: "game matrix" });
    }
    let shift = positivity_shift(m);
    let shifted = m.shifted(shift)?;
    let (y, duals, objective) = Tableau::packing_lp(&shifted).solve()?;
    if objective <= 0.0 {
        return Err(Error::Solver(format!("non-positive LP optimum {objective}")));
    }
    let shifted_value = 1.0 / objective;
    let col_strategy = MixedStrategy::from_lp_solution(y)?;
    let row_strategy = MixedStrategy::from_lp_solution(duals)?;
    Ok(SaddlePoint {
        row_strategy,
        col_strategy,
        value: shifted_value - shift,
    })
}

/// Dense simplex tableau for `max 1^T y  s.t.  A y <= 1, y >= 0` with the
/// slack basis as the starting vertex.
struct Tableau {
    n_rows: usize,
    n_struct: usize,
    width: usize,
    /// `n_rows` constraint rows followed by the objective row, each of
    /// length `width = n_struct + n_rows + 1`; the last column is the RHS.
    cells: Vec<f64>,
    basis: Vec<usize>,
}

impl Tableau {
    fn packing_lp(a: &GameMatrix) -> Self {
        let n_rows = a.rows();
        let n_struct = a.cols();
        let width = n_struct + n_rows + 1;
        let mut cells = vec![0.0; (n_rows + 1) * width];
        for i in 0..n_rows {
            let row = &mut cells[i * width..(i + 1) * width];
            row[..n_struct].copy_from_slice(a.row(i));
            row[n_struct + i] = 1.0;
            row[width - 1] = 1.0;
        }
        // objective row holds reduced costs c_j - z_j; the RHS cell holds -z
        let obj = &mut cells[n_rows * width..];
        obj[..n_struct].iter_mut().for_each(|c| *c = 1.0);
        Self {
            n_rows,
            n_struct,
            width,
            cells,
            basis: (n_struct..n_struct + n_rows).collect(),
        }
    }

    #[inline]
    fn at(&self, i: usize, j: usize) -> f64 {
        self.cells[i * self.width + j]
    }

    /// Runs Bland's rule to optimality. Returns the structural solution,
    /// the dual prices and the objective value.
    fn solve(mut self) -> Result<(Vec<f64>, Vec<f64>, f64)> {
        let obj_row = self.n_rows;
        let rhs = self.width - 1;
        for _ in 0..MAX_PIVOTS {
            let entering = (0..rhs).find(|&j| self.at(obj_row, j) > SIMPLEX_TOLERANCE);
            let Some(col) = entering else {
                return Ok(self.extract());
            };
            let mut leaving: Option<(usize, f64)> = None;
            for i in 0..self.n_rows {
                let a = self.at(i, col);
                if a > SIMPLEX_TOLERANCE {
                    let ratio = self.at(i, rhs) / a;
                    leaving = match leaving {
                        None => Some((i, ratio)),
                        Some((r, best)) => {
                            if ratio < best - SIMPLEX_TOLERANCE
                                || (ratio <= best + SIMPLEX_TOLERANCE
                                    && self.basis[i] < self.basis[r])
                            {
                                Some((i, ratio))
                            } else {
                                Some((r, best))
                            }
                        }
                    };
                }
            }
            let Some((row, _)) = leaving else {
                return Err(Error::Solver("unbounded LP".into()));
            };
            self.pivot(row, col);
        }
        Err(Error::Solver(format!("no convergence after {MAX_PIVOTS} pivots")))
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width;
        let p = self.at(row, col);
        for v in &mut self.cells[row * w..(row + 1) * w] {
            *v /= p;
        }
        let pivot_row: Vec<f64> = self.cells[row * w..(row + 1) * w].to_vec();
        for i in 0..=self.n_rows {
            if i == row {
                continue;
            }
            let factor = self.at(i, col);
            if factor == 0.0 {
                continue;
            }
            for (cell, pv) in self.cells[i * w..(i + 1) * w].iter_mut().zip(&pivot_row) {
                *cell -= factor * pv;
            }
            self.cells[i * w + col] = 0.0;
        }
        self.basis[row] = col;
    }

    fn extract(&self) -> (Vec<f64>, Vec<f64>, f64) {
        let rhs = self.width - 1;
        let mut y = vec![0.0; self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                y[b] = self.at(i, rhs);
            }
        }
        let obj_row = self.n_rows;
        let duals = (0..self.n_rows)
            .map(|i| -self.at(obj_row, self.n_struct + i))
            .collect();
        (y, duals, -self.at(obj_row, rhs))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn game(rows: &[&[f64]]) -> GameMatrix {
        GameMatrix::from_rows(rows).unwrap()
    }

    fn assert_saddle_invariants(m: &GameMatrix, sp: &SaddlePoint) {
        let payoff = expected_payoff(m, &sp.row_strategy, &sp.col_strategy).unwrap();
        assert!((payoff - sp.value).abs() <= VALUE_TOLERANCE, "{payoff} vs {}", sp.value);
        let row_guarantee = best_response_value(m, &sp.row_strategy, Side::Col).unwrap();
        let col_guarantee = best_response_value(m, &sp.col_strategy, Side::Row).unwrap();
        assert!(row_guarantee >= sp.value - VALUE_TOLERANCE);
        assert!(col_guarantee <= sp.value + VALUE_TOLERANCE);
    }

    #[test]
    fn zero_matrix_has_zero_value() {
        let m = GameMatrix::zeros(2, 2).unwrap();
        let sp = solve_saddle_point(&m).unwrap();
        assert!(sp.value.abs() < VALUE_TOLERANCE);
        assert_saddle_invariants(&m, &sp);
    }

    #[test]
    fn matching_pennies() {
        let m = game(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let sp = solve_saddle_point(&m).unwrap();
        assert!(sp.value.abs() < VALUE_TOLERANCE);
        for p in sp.row_strategy.probs().iter().chain(sp.col_strategy.probs()) {
            assert!((p - 0.5).abs() < VALUE_TOLERANCE);
        }
    }

    #[test]
    fn pure_saddle_and_rectangular_games() {
        // row 0 dominates; column 1 is the minimizer's choice
        let m = game(&[&[3.0, 1.0, 4.0], &[0.0, -2.0, 1.0]]);
        let sp = solve_saddle_point(&m).unwrap();
        assert!((sp.value - 1.0).abs() < VALUE_TOLERANCE);
        assert_saddle_invariants(&m, &sp);

        let single = game(&[&[-7.5]]);
        let sp = solve_saddle_point(&single).unwrap();
        assert!((sp.value + 7.5).abs() < VALUE_TOLERANCE);
    }

    #[test]
    fn rock_paper_scissors() {
        let m = game(&[&[0.0, -1.0, 1.0], &[1.0, 0.0, -1.0], &[-1.0, 1.0, 0.0]]);
        let sp = solve_saddle_point(&m).unwrap();
        assert!(sp.value.abs() < VALUE_TOLERANCE);
        for p in sp.row_strategy.probs() {
            assert!((p - 1.0 / 3.0).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_game_is_handled() {
        let m = GameMatrix::new(3, 4, vec![2.5; 12]).unwrap();
        let sp = solve_saddle_point(&m).unwrap();
        assert!((sp.value - 2.5).abs() < VALUE_TOLERANCE);
        assert_saddle_invariants(&m, &sp);
    }

    #[test]
    fn rejects_non_finite_and_bad_shapes() {
        assert!(matches!(
            GameMatrix::new(1, 2, vec![0.0, f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
        assert!(GameMatrix::new(0, 2, vec![]).is_err());
        assert!(GameMatrix::new(2, 2, vec![0.0; 3]).is_err());
        assert!(GameMatrix::from_rows(&[vec![1.0, 2.0], vec![1.0]]).is_err());
    }

    #[test]
    fn shift_constant() {
        assert_eq!(positivity_shift(&game(&[&[1.0, 2.0]])), 0.0);
        assert_eq!(positivity_shift(&game(&[&[0.0, 2.0]])), 1.0);
        assert_eq!(positivity_shift(&game(&[&[-3.0, 2.0]])), 4.0);
    }

    #[test]
    fn best_response_examples() {
        let pennies = game(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let half = MixedStrategy::uniform(2).unwrap();
        assert_eq!(best_response_value(&pennies, &half, Side::Row).unwrap(), 0.0);

        let m = game(&[&[2.0, 0.0], &[0.0, 1.0]]);
        let first = MixedStrategy::pure(2, 0).unwrap();
        assert_eq!(best_response_value(&m, &first, Side::Row).unwrap(), 2.0);
        assert_eq!(best_response(&m, &first, Side::Col).unwrap(), (1, 0.0));

        let wide = game(&[&[1.0, 2.0, 3.0]]);
        assert!(matches!(
            best_response_value(&wide, &half, Side::Row),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn expected_payoff_examples() {
        let pennies = game(&[&[1.0, -1.0], &[-1.0, 1.0]]);
        let half = MixedStrategy::uniform(2).unwrap();
        assert_eq!(expected_payoff(&pennies, &half, &half).unwrap(), 0.0);

        let m = game(&[&[1.0, 0.0], &[0.0, 0.0]]);
        let e0 = MixedStrategy::pure(2, 0).unwrap();
        assert_eq!(expected_payoff(&m, &e0, &e0).unwrap(), 1.0);

        let three = MixedStrategy::uniform(3).unwrap();
        assert!(expected_payoff(&m, &three, &half).is_err());
    }

    #[test]
    fn strategy_validation() {
        assert!(MixedStrategy::new(vec![0.5, 0.5]).is_ok());
        assert!(MixedStrategy::new(vec![0.5, 0.5 + 1e-6]).is_err());
        assert!(MixedStrategy::new(vec![1.5, -0.5]).is_err());
        assert!(MixedStrategy::new(vec![]).is_err());
        assert!(MixedStrategy::pure(3, 3).is_err());
        let parsed: std::result::Result<MixedStrategy, _> = serde_json::from_str("[0.2, 0.2]");
        assert!(parsed.is_err());
    }

    #[test]
    fn sampling_a_pure_strategy_is_deterministic() {
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let s = MixedStrategy::pure(4, 2).unwrap();
        assert!((0..100).all(|_| s.sample(&mut rng) == 2));
    }
}
