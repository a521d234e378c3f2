//! Gaussian toy latent-variable model
//!
//! ```text
//! z | theta ~ N(theta 1_d, I_d),    y | z ~ N(z, I_d)
//! ```
//!
//! with `X = p(y | Z, theta)`, `Z ~ p(z | theta)` as the unbiased draw of the
//! marginal likelihood `m = p(y | theta) = N(y; theta 1_d, 2 I_d)`.

use std::f64::consts::PI;

use debias_core::{Error, PairSource, Result, SampleSource};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

/// A single observation `y` of dimension `d` under parameter `theta`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLvmSpec {
    pub d: usize,
    pub theta: f64,
    pub y: Vec<f64>,
}

/// Closed-form moments of `X` for one observation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ToyLvmMoments {
    pub m: f64,
    pub var: f64,
    pub x0_star: f64,
    pub beta2_at_x0star: f64,
    /// Mean of the entries of `y`; the MLE of `theta` from this observation.
    pub mle: f64,
}

/// `log N(y; mu 1_d, s2 I_d)`.
fn log_normal_iso(y: &[f64], mu: f64, s2: f64) -> f64 {
    let d = y.len() as f64;
    let sq: f64 = y.iter().map(|v| (v - mu) * (v - mu)).sum();
    -0.5 * d * (2.0 * PI * s2).ln() - sq / (2.0 * s2)
}

impl ToyLvmSpec {
    pub fn new(d: usize, theta: f64, y: Vec<f64>) -> Result<Self> {
        if d == 0 {
            return Err(Error::domain("toy LVM needs d >= 1"));
        }
        if y.len() != d {
            return Err(Error::domain(format!("toy LVM: y has {} entries, expected d = {d}", y.len())));
        }
        if !theta.is_finite() || y.iter().any(|v| !v.is_finite()) {
            return Err(Error::domain("toy LVM: theta and y must be finite"));
        }
        Ok(Self { d, theta, y })
    }

    /// The observation `y = theta 1_d`.
    pub fn at_mean(d: usize, theta: f64) -> Result<Self> {
        Self::new(d, theta, vec![theta; d])
    }

    pub fn with_theta(&self, theta: f64) -> Self {
        Self { theta, ..self.clone() }
    }

    /// `||y - theta 1_d||^2`.
    pub fn sq_dist(&self) -> f64 {
        self.y.iter().map(|v| (v - self.theta) * (v - self.theta)).sum()
    }

    pub fn log_m(&self) -> f64 {
        log_normal_iso(&self.y, self.theta, 2.0)
    }

    /// `d/dtheta log p(y | theta) = sum_j (y_j - theta) / 2`.
    pub fn grad_log_m(&self) -> f64 {
        self.y.iter().map(|v| v - self.theta).sum::<f64>() / 2.0
    }

    pub fn moments(&self) -> ToyLvmMoments {
        toy_lvm_moments(self)
    }

    /// `X = N(y; Z, I_d)` with `Z ~ N(theta 1_d, I_d)`.
    pub fn sample_x<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let mut sq = 0.0;
        for yj in &self.y {
            let e: f64 = rng.sample(StandardNormal);
            let diff = yj - self.theta - e;
            sq += diff * diff;
        }
        (-0.5 * self.d as f64 * (2.0 * PI).ln() - 0.5 * sq).exp()
    }

    /// `(X, X sum_j (Z_j - theta))`; the second entry has mean `d m / dtheta`.
    pub fn sample_pair<R: Rng + ?Sized>(&self, rng: &mut R) -> (f64, f64) {
        let mut score = 0.0;
        let mut sq = 0.0;
        for yj in &self.y {
            let e: f64 = rng.sample(StandardNormal);
            score += e;
            let diff = yj - self.theta - e;
            sq += diff * diff;
        }
        let x = (-0.5 * self.d as f64 * (2.0 * PI).ln() - 0.5 * sq).exp();
        (x, x * score)
    }
}

pub fn toy_lvm_moments(spec: &ToyLvmSpec) -> ToyLvmMoments {
    let d = spec.d as f64;
    let log_m = spec.log_m();
    let m = log_m.exp();
    let second = (-0.5 * d * (4.0 * PI).ln() + log_normal_iso(&spec.y, spec.theta, 1.5)).exp();
    let var = (second - m * m).max(0.0);
    let beta2_at_x0star = 1.0 - (4.0f64 / 3.0).powf(-d / 2.0) * (-spec.sq_dist() / 6.0).exp();
    ToyLvmMoments { m, var, x0_star: (m * m + var) / m, beta2_at_x0star, mle: spec.y.iter().sum::<f64>() / d }
}

/// `(d n)^{-1} sum_i 1^T y_i`.
pub fn dataset_mle(data: &[Vec<f64>]) -> f64 {
    let count: usize = data.iter().map(Vec::len).sum();
    data.iter().flatten().sum::<f64>() / count as f64
}

/// `n` observations from the model at `theta`.
pub fn sample_dataset<R: Rng + ?Sized>(d: usize, n: usize, theta: f64, rng: &mut R) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| {
                    let z: f64 = theta + rng.sample::<f64, _>(StandardNormal);
                    z + rng.sample::<f64, _>(StandardNormal)
                })
                .collect()
        })
        .collect()
}

impl SampleSource<f64> for ToyLvmSpec {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        Ok(self.sample_x(rng))
    }
}

impl PairSource<f64> for ToyLvmSpec {
    fn dim(&self) -> usize {
        1
    }

    fn draw_pair<R: Rng + ?Sized>(&mut self, rng: &mut R, g: &mut [f64]) -> Result<f64> {
        let (x, grad) = self.sample_pair(rng);
        g[0] = grad;
        Ok(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_forms_at_the_mean() {
        let s = ToyLvmSpec::at_mean(2, 0.7).unwrap();
        let mo = s.moments();
        assert!((mo.m - 1.0 / (4.0 * PI)).abs() < 1e-15);
        assert!((mo.var - 1.0 / (48.0 * PI * PI)).abs() < 1e-15);
        assert!((mo.x0_star - 1.0 / (3.0 * PI)).abs() < 1e-15);
        assert!((mo.beta2_at_x0star - 0.25).abs() < 1e-15);
        assert_eq!(mo.mle, 0.7);
    }

    #[test]
    fn beta_formula_matches_moments() {
        for (d, y) in [(1, vec![2.5]), (2, vec![0.1, -1.0]), (5, vec![1.0, 2.0, 0.0, -0.5, 3.0])] {
            let s = ToyLvmSpec::new(d, 0.3, y).unwrap();
            let mo = s.moments();
            let direct = mo.var / (mo.m * mo.m + mo.var);
            assert!((direct - mo.beta2_at_x0star).abs() < 1e-12, "d={d}");
        }
        let far = ToyLvmSpec::new(1, 0.0, vec![40.0]).unwrap();
        assert!(far.moments().beta2_at_x0star > 1.0 - 1e-12);
    }

    #[test]
    fn beta_grows_with_dimension() {
        let mut prev = 0.0;
        for d in 1..10 {
            let b = ToyLvmSpec::at_mean(d, 1.0).unwrap().moments().beta2_at_x0star;
            assert!(b > prev);
            prev = b;
        }
    }

    #[test]
    fn validation() {
        assert!(ToyLvmSpec::new(0, 1.0, vec![]).is_err());
        assert!(ToyLvmSpec::new(2, 1.0, vec![1.0]).is_err());
        assert!(ToyLvmSpec::new(1, f64::NAN, vec![1.0]).is_err());
    }

    #[test]
    fn mle_of_dataset() {
        assert_eq!(dataset_mle(&[vec![1.0, 2.0], vec![3.0, 6.0]]), 3.0);
    }
}
