//! Regularized least-squares estimation of the expert mixing weights and the
//! confidence ellipsoid around the estimate.
//!
//! The state is the Gram matrix `V = lambda I + sum z z^T` and the moment
//! vector `Y = sum z r`. Everything that needs `V^{-1}` goes through a
//! Cholesky factor; `V` is never inverted explicitly.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EstimatorConfig {
    /// Ridge regularizer.
    pub lambda: f64,
    /// Euclidean bound on the true parameter.
    pub bound: f64,
    /// Confidence level of the ellipsoid is `1 - delta`.
    pub delta: f64,
    /// Number of experts, i.e. the parameter dimension.
    pub experts: usize,
}

impl EstimatorConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return Err(Error::config("lambda", "must be a positive finite number"));
        }
        if !(self.bound.is_finite() && self.bound > 0.0) {
            return Err(Error::config("bound", "must be a positive finite number"));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::config("delta", "must lie strictly between 0 and 1"));
        }
        if self.experts == 0 {
            return Err(Error::config("experts", "must be at least 1"));
        }
        Ok(())
    }
}

/// Cholesky factor of `V`, reused for every `V^{-1}` application within an
/// episode.
#[derive(Debug, Clone)]
pub struct GramFactor {
    lower: DMatrix<f64>,
}

impl GramFactor {
    fn new(gram: &DMatrix<f64>) -> Result<Self> {
        let chol = gram
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Solver("Gram matrix lost positive definiteness".into()))?;
        Ok(Self { lower: chol.unpack() })
    }

    /// `x^T V^{-1} x`.
    pub fn inverse_quadratic(&self, x: &[f64]) -> f64 {
        let rhs = DVector::from_column_slice(x);
        match self.lower.solve_lower_triangular(&rhs) {
            Some(w) => w.norm_squared(),
            None => f64::INFINITY,
        }
    }

    /// `V^{-1} b`.
    pub fn solve(&self, b: &DVector<f64>) -> DVector<f64> {
        let w = self
            .lower
            .solve_lower_triangular(b)
            .expect("Cholesky factor has a positive diagonal");
        self.lower
            .tr_solve_lower_triangular(&w)
            .expect("Cholesky factor has a positive diagonal")
    }

    pub fn log_det(&self) -> f64 {
        2.0 * self.lower.diagonal().iter().map(|d| d.ln()).sum::<f64>()
    }
}

#[derive(Debug, Clone)]
pub struct RidgeEstimator {
    config: EstimatorConfig,
    gram: DMatrix<f64>,
    moments: DVector<f64>,
    n_obs: usize,
    potential: f64,
    initial_log_det: f64,
}

impl RidgeEstimator {
    /// Starts from `V = lambda I`, `Y = 0`.
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let s = config.experts;
        let gram = DMatrix::identity(s, s) * config.lambda;
        // taken through the same factorization as every later log-det, so
        // that the ratio is exactly zero before any observation
        let initial_log_det = GramFactor::new(&gram)?.log_det();
        Ok(Self {
            config,
            gram,
            moments: DVector::zeros(s),
            n_obs: 0,
            potential: 0.0,
            initial_log_det,
        })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn dim(&self) -> usize {
        self.config.experts
    }

    pub fn n_obs(&self) -> usize {
        self.n_obs
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn moments(&self) -> &DVector<f64> {
        &self.moments
    }

    fn check(&self, z: &[f64], r: f64) -> Result<()> {
        if z.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "feature vector",
                expected: self.dim(),
                found: z.len(),
            });
        }
        if z.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "feature vector" });
        }
        if !r.is_finite() {
            return Err(Error::NonFinite { what: "reward" });
        }
        Ok(())
    }

    /// Adds one observation: `V += z z^T`, `Y += z r`.
    pub fn absorb(&mut self, z: &[f64], r: f64) -> Result<()> {
        self.check(z, r)?;
        self.potential += self.factor()?.inverse_quadratic(z).min(1.0);
        self.gram.ger(1.0, &DVector::from_column_slice(z), &DVector::from_column_slice(z), 1.0);
        for (m, zi) in self.moments.iter_mut().zip(z) {
            *m += zi * r;
        }
        self.n_obs += 1;
        Ok(())
    }

    /// Adds a whole episode at once: `V += Z^T Z`, `Y += Z^T X`.
    ///
    /// Validation happens before any mutation, so a bad observation leaves the
    /// state untouched.
    pub fn absorb_batch<Z: AsRef<[f64]>>(&mut self, observations: &[(Z, f64)]) -> Result<()> {
        for (z, r) in observations {
            self.check(z.as_ref(), *r)?;
        }
        if observations.is_empty() {
            return Ok(());
        }
        let s = self.dim();
        let mut zz = DMatrix::zeros(s, s);
        let mut zx = DVector::zeros(s);
        // the elliptical potential is measured against the running V_{k-1,t-1}
        let mut running = self.gram.clone();
        let mut potential = 0.0;
        for (z, r) in observations {
            let z = DVector::from_column_slice(z.as_ref());
            potential += GramFactor::new(&running)?
                .inverse_quadratic(z.as_slice())
                .min(1.0);
            running.ger(1.0, &z, &z, 1.0);
            zz.ger(1.0, &z, &z, 1.0);
            zx.axpy(*r, &z, 1.0);
        }
        self.gram += zz;
        self.moments += zx;
        self.potential += potential;
        self.n_obs += observations.len();
        Ok(())
    }

    pub fn factor(&self) -> Result<GramFactor> {
        GramFactor::new(&self.gram)
    }

    /// `V^{-1} Y`; zero before any observation.
    pub fn point_estimate(&self) -> Result<Vec<f64>> {
        Ok(self.point_estimate_with(&self.factor()?))
    }

    pub fn point_estimate_with(&self, factor: &GramFactor) -> Vec<f64> {
        factor.solve(&self.moments).as_slice().to_vec()
    }

    /// `ln det V`, recomputed from the factorization.
    pub fn log_det(&self) -> Result<f64> {
        Ok(self.factor()?.log_det())
    }

    /// `ln det(lambda I)`.
    pub fn initial_log_det(&self) -> f64 {
        self.initial_log_det
    }

    /// Squared confidence radius
    /// `( sqrt(2 ln(det(V)^{1/2} det(lambda I)^{-1/2} / delta)) + sqrt(lambda) B )^2`.
    pub fn beta_radius(&self) -> Result<f64> {
        Ok(self.beta_radius_with(&self.factor()?))
    }

    pub fn beta_radius_with(&self, factor: &GramFactor) -> f64 {
        beta_from_log_det(&self.config, factor.log_det() - self.initial_log_det())
    }

    /// Closed-form upper bound on the radius after `n` observations, with
    /// features bounded by `sqrt(S)`. Diagnostic only.
    pub fn beta_closed_form(&self, n: usize) -> f64 {
        let EstimatorConfig {
            lambda,
            bound,
            delta,
            experts,
        } = self.config;
        let s = experts as f64;
        let log_growth = ((lambda * s + n as f64 * s) / (lambda * s)).ln();
        let root = lambda.sqrt() * bound + (2.0 * (1.0 / delta).ln() + s * log_growth).sqrt();
        root * root
    }

    /// `sqrt(x^T V^{-1} x)`.
    pub fn ellipsoid_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "ellipsoid argument",
                expected: self.dim(),
                found: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite { what: "ellipsoid argument" });
        }
        Ok(self.factor()?.inverse_quadratic(x).sqrt())
    }

    /// `||x||_V = sqrt(x^T V x)`, the norm defining the confidence set.
    pub fn gram_norm(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                what: "gram norm argument",
                expected: self.dim(),
                found: x.len(),
            });
        }
        let x = DVector::from_column_slice(x);
        Ok((x.transpose() * &self.gram * &x)[(0, 0)].max(0.0).sqrt())
    }

    /// Whether `theta` lies in `{ ||theta - theta_hat||_V^2 <= beta }`.
    pub fn covers(&self, theta: &[f64]) -> Result<bool> {
        let factor = self.factor()?;
        let estimate = self.point_estimate_with(&factor);
        let diff: Vec<f64> = theta.iter().zip(&estimate).map(|(a, b)| a - b).collect();
        let dist = self.gram_norm(&diff)?;
        Ok(dist * dist <= self.beta_radius_with(&factor))
    }

    /// Running `sum min(1, ||z_t||^2_{V_{t-1}^{-1}})` over all absorbed
    /// observations.
    pub fn potential_sum(&self) -> f64 {
        self.potential
    }

    /// `2 ln(det V / det V_0)`, the bound the potential sum never exceeds.
    pub fn potential_bound(&self) -> Result<f64> {
        Ok(2.0 * (self.log_det()? - self.initial_log_det()))
    }
}

fn beta_from_log_det(config: &EstimatorConfig, log_det_ratio: f64) -> f64 {
    let inner = 2.0 * (0.5 * log_det_ratio - config.delta.ln());
    let root = inner.max(0.0).sqrt() + config.lambda.sqrt() * config.bound;
    root * root
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg(lambda: f64, bound: f64, delta: f64, experts: usize) -> EstimatorConfig {
        EstimatorConfig {
            lambda,
            bound,
            delta,
            experts,
        }
    }

    #[test]
    fn init_state() {
        let est = RidgeEstimator::new(cfg(0.1, 3.0, 0.01, 2)).unwrap();
        assert_eq!(est.gram(), &DMatrix::from_row_slice(2, 2, &[0.1, 0.0, 0.0, 0.1]));
        assert_eq!(est.moments().as_slice(), &[0.0, 0.0]);
        assert_eq!(est.point_estimate().unwrap(), vec![0.0, 0.0]);

        let one = RidgeEstimator::new(cfg(1.0, 1.0, 0.5, 1)).unwrap();
        assert_eq!(one.gram()[(0, 0)], 1.0);

        let ten = RidgeEstimator::new(cfg(0.1, 3.0, 0.01, 10)).unwrap();
        let det = ten.log_det().unwrap().exp();
        assert!((det / 0.1f64.powi(10) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn invalid_configs() {
        for bad in [
            cfg(0.0, 1.0, 0.1, 2),
            cfg(1.0, -1.0, 0.1, 2),
            cfg(1.0, 1.0, 1.0, 2),
            cfg(1.0, 1.0, 0.0, 2),
            cfg(1.0, 1.0, 0.1, 0),
            cfg(f64::NAN, 1.0, 0.1, 2),
        ] {
            assert!(matches!(RidgeEstimator::new(bad), Err(Error::InvalidConfig { .. })));
        }
    }

    #[test]
    fn basis_vector_update() {
        let mut est = RidgeEstimator::new(cfg(1.0, 1.0, 0.1, 2)).unwrap();
        est.absorb(&[1.0, 0.0], 2.0).unwrap();
        assert_eq!(est.gram(), &DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0]));
        assert_eq!(est.moments().as_slice(), &[2.0, 0.0]);
        assert_eq!(est.n_obs(), 1);
    }

    #[test]
    fn zero_feature_is_a_no_op_on_v_and_y() {
        let mut est = RidgeEstimator::new(cfg(0.5, 1.0, 0.1, 3)).unwrap();
        est.absorb(&[0.2, 0.4, 0.1], 1.0).unwrap();
        let (v, y) = (est.gram().clone(), est.moments().clone());
        est.absorb(&[0.0, 0.0, 0.0], 123.0).unwrap();
        assert_eq!(est.gram(), &v);
        assert_eq!(est.moments(), &y);
    }

    #[test]
    fn scalar_estimate() {
        let mut est = RidgeEstimator::new(cfg(1.0, 1.0, 0.1, 1)).unwrap();
        est.absorb(&[1.0], 3.0).unwrap();
        assert!((est.point_estimate().unwrap()[0] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_observations() {
        let mut est = RidgeEstimator::new(cfg(1.0, 1.0, 0.1, 2)).unwrap();
        assert!(matches!(est.absorb(&[1.0], 0.0), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(est.absorb(&[f64::NAN, 0.0], 0.0), Err(Error::NonFinite { .. })));
        assert!(matches!(est.absorb(&[0.0, 0.0], f64::INFINITY), Err(Error::NonFinite { .. })));
        let batch = vec![(vec![0.1, 0.2], 1.0), (vec![0.1, f64::NAN], 1.0)];
        assert!(est.absorb_batch(&batch).is_err());
        assert_eq!(est.n_obs(), 0);
        assert!(est.ellipsoid_norm(&[1.0, f64::NAN]).is_err());
    }

    #[test]
    fn beta_at_initialization() {
        let est = RidgeEstimator::new(cfg(1.0, 1.0, 0.999, 4)).unwrap();
        let expected = ((2.0 * (1.0f64 / 0.999).ln()).sqrt() + 1.0).powi(2);
        assert!((est.beta_radius().unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn beta_is_monotone_and_potential_bounded() {
        let mut est = RidgeEstimator::new(cfg(0.1, 3.0, 3e-3, 5)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut last = est.beta_radius().unwrap();
        for _ in 0..300 {
            let z: Vec<f64> = (0..5).map(|_| rng.random::<f64>()).collect();
            est.absorb(&z, rng.random::<f64>()).unwrap();
            let beta = est.beta_radius().unwrap();
            assert!(beta >= last - 1e-12);
            last = beta;
            assert!(est.potential_sum() <= est.potential_bound().unwrap() + 1e-9);
        }
        assert!(last <= est.beta_closed_form(est.n_obs()) + 1e-9);
    }

    #[test]
    fn ellipsoid_norm_examples() {
        let est = RidgeEstimator::new(cfg(1.0, 1.0, 0.1, 2)).unwrap();
        assert!((est.ellipsoid_norm(&[3.0, 4.0]).unwrap() - 5.0).abs() < 1e-14);
        let est = RidgeEstimator::new(cfg(0.25, 1.0, 0.1, 3)).unwrap();
        assert!((est.ellipsoid_norm(&[0.0, 1.0, 0.0]).unwrap() - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rewards_scale_linearly() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut a = RidgeEstimator::new(cfg(0.3, 1.0, 0.1, 3)).unwrap();
        let mut b = a.clone();
        for _ in 0..40 {
            let z: Vec<f64> = (0..3).map(|_| rng.random::<f64>()).collect();
            let r: f64 = rng.random::<f64>() - 0.5;
            a.absorb(&z, r).unwrap();
            b.absorb(&z, 4.0 * r).unwrap();
        }
        let ta = a.point_estimate().unwrap();
        let tb = b.point_estimate().unwrap();
        // a power-of-two scale commutes with every rounding step
        for (x, y) in ta.iter().zip(&tb) {
            assert_eq!(4.0 * x, *y);
        }
    }
}
