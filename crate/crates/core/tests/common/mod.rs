//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the crate's solvers: games are solved by kernel
//! enumeration and linear systems by plain Gaussian elimination.
#![allow(dead_code, clippy::needless_range_loop)]

use ofulinmat::GameMatrix;

pub const ORACLE_TOL: f64 = 1e-9;

/// Solves `a x = b` by Gaussian elimination with partial pivoting.
/// Returns `None` for (numerically) singular systems.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))?;
        if a[pivot][col].abs() < 1e-10 {
            return None;
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for r in col + 1..n {
            let f = a[r][col] / a[col][col];
            for c in col..n {
                a[r][c] -= f * a[col][c];
            }
            b[r] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for r in (0..n).rev() {
        let s: f64 = (r + 1..n).map(|c| a[r][c] * x[c]).sum();
        x[r] = (b[r] - s) / a[r][r];
    }
    Some(x)
}

/// Dense inverse by Gauss-Jordan elimination on `[A | I]`.
pub fn gauss_jordan_inverse(a: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let mut aug: Vec<Vec<f64>> = a
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut r = row.clone();
            r.extend((0..n).map(|j| if i == j { 1.0 } else { 0.0 }));
            r
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| aug[i][col].abs().total_cmp(&aug[j][col].abs()))
            .unwrap();
        assert!(aug[pivot][col].abs() > 1e-300, "singular matrix");
        aug.swap(col, pivot);
        let p = aug[col][col];
        aug[col].iter_mut().for_each(|v| *v /= p);
        for r in 0..n {
            if r != col {
                let f = aug[r][col];
                if f != 0.0 {
                    for c in 0..2 * n {
                        aug[r][c] -= f * aug[col][c];
                    }
                }
            }
        }
    }
    aug.into_iter().map(|r| r[n..].to_vec()).collect()
}

pub fn mat_vec(a: &[Vec<f64>], x: &[f64]) -> Vec<f64> {
    a.iter().map(|r| r.iter().zip(x).map(|(p, q)| p * q).sum()).collect()
}

pub fn quad(a: &[Vec<f64>], x: &[f64]) -> f64 {
    x.iter().zip(mat_vec(a, x)).map(|(p, q)| p * q).sum()
}

/// `ln det` by elimination, for matrices known to be positive definite.
pub fn log_det(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut acc = 0.0;
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs())).unwrap();
        m.swap(col, pivot);
        let p = m[col][col];
        acc += p.abs().ln();
        for r in col + 1..n {
            let f = m[r][col] / p;
            for c in col..n {
                m[r][c] -= f * m[col][c];
            }
        }
    }
    acc
}

/// Ridge solution recomputed from scratch from the raw observations.
pub struct RidgeReference {
    pub gram: Vec<Vec<f64>>,
    pub moments: Vec<f64>,
}

impl RidgeReference {
    pub fn new(observations: &[(Vec<f64>, f64)], lambda: f64, dim: usize) -> Self {
        let mut gram = vec![vec![0.0; dim]; dim];
        for (i, row) in gram.iter_mut().enumerate() {
            row[i] = lambda;
        }
        let mut moments = vec![0.0; dim];
        for (z, r) in observations {
            for i in 0..dim {
                moments[i] += z[i] * r;
                for j in 0..dim {
                    gram[i][j] += z[i] * z[j];
                }
            }
        }
        Self { gram, moments }
    }

    pub fn estimate(&self) -> Vec<f64> {
        mat_vec(&gauss_jordan_inverse(&self.gram), &self.moments)
    }

    pub fn beta(&self, lambda: f64, bound: f64, delta: f64) -> f64 {
        let dim = self.moments.len() as f64;
        let log_ratio = log_det(&self.gram) - dim * lambda.ln();
        let root = (2.0 * (0.5 * log_ratio + (1.0 / delta).ln())).sqrt() + lambda.sqrt() * bound;
        root * root
    }
}

/// Oracle solution of a zero-sum game.
#[derive(Debug, Clone)]
pub struct OracleSolution {
    pub value: f64,
    pub row: Vec<f64>,
    pub col: Vec<f64>,
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn go(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            go(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    go(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Brute-force solution by support enumeration over square kernels.
///
/// The game is first shifted so that its value is positive; then some pair
/// of extreme optimal strategies is supported on a nonsingular square
/// submatrix on which both players equalize. Every candidate kernel is
/// solved directly and accepted only when it is a saddle point of the whole
/// game.
pub fn support_enumeration(m: &GameMatrix) -> OracleSolution {
    let (rows, cols) = (m.rows(), m.cols());
    let shift = 1.0 - m.min_entry();
    let a = |i: usize, j: usize| m.get(i, j) + shift;
    for k in 1..=rows.min(cols) {
        for rs in subsets(rows, k) {
            for cs in subsets(cols, k) {
                // row player: x^T A_IJ = v 1, sum x = 1  (unknowns x_I, v)
                let mut lhs = vec![vec![0.0; k + 1]; k + 1];
                let mut rhs = vec![0.0; k + 1];
                for (c, &j) in cs.iter().enumerate() {
                    for (r, &i) in rs.iter().enumerate() {
                        lhs[c][r] = a(i, j);
                    }
                    lhs[c][k] = -1.0;
                }
                lhs[k][..k].iter_mut().for_each(|v| *v = 1.0);
                rhs[k] = 1.0;
                let Some(xs) = gauss_solve(lhs, rhs.clone()) else { continue };

                let mut lhs = vec![vec![0.0; k + 1]; k + 1];
                for (r, &i) in rs.iter().enumerate() {
                    for (c, &j) in cs.iter().enumerate() {
                        lhs[r][c] = a(i, j);
                    }
                    lhs[r][k] = -1.0;
                }
                lhs[k][..k].iter_mut().for_each(|v| *v = 1.0);
                let Some(ys) = gauss_solve(lhs, rhs) else { continue };

                if xs[..k].iter().chain(&ys[..k]).any(|&p| p < -ORACLE_TOL) {
                    continue;
                }
                let mut row = vec![0.0; rows];
                for (r, &i) in rs.iter().enumerate() {
                    row[i] = xs[r].max(0.0);
                }
                let mut col = vec![0.0; cols];
                for (c, &j) in cs.iter().enumerate() {
                    col[j] = ys[c].max(0.0);
                }
                let v = xs[k];
                let guaranteed = (0..cols)
                    .map(|j| (0..rows).map(|i| row[i] * a(i, j)).sum::<f64>())
                    .fold(f64::INFINITY, f64::min);
                let conceded = (0..rows)
                    .map(|i| (0..cols).map(|j| a(i, j) * col[j]).sum::<f64>())
                    .fold(f64::NEG_INFINITY, f64::max);
                if guaranteed >= v - ORACLE_TOL && conceded <= v + ORACLE_TOL {
                    return OracleSolution {
                        value: v - shift,
                        row,
                        col,
                    };
                }
            }
        }
    }
    panic!("support enumeration found no kernel; the oracle is broken");
}

/// `min_j (mu^T M)_j`, the row player's security level of `mu`.
pub fn row_security(m: &GameMatrix, mu: &[f64]) -> f64 {
    m.col_payoffs(mu).into_iter().fold(f64::INFINITY, f64::min)
}

/// `max_i (M nu)_i`, the most the column player concedes with `nu`.
pub fn col_security(m: &GameMatrix, nu: &[f64]) -> f64 {
    m.row_payoffs(nu).into_iter().fold(f64::NEG_INFINITY, f64::max)
}

/// Random game with integer entries in `[-5, 5]`.
pub fn random_integer_game<R: rand::Rng>(rng: &mut R, max_dim: usize) -> GameMatrix {
    let rows = rng.random_range(1..=max_dim);
    let cols = rng.random_range(1..=max_dim);
    let entries = (0..rows * cols).map(|_| rng.random_range(-5i32..=5) as f64).collect();
    GameMatrix::new(rows, cols, entries).unwrap()
}
