//! Importance-weighted (IWAE) estimates of `log p(y | theta)` and their
//! randomly truncated multilevel debiasing.

use std::f64::consts::PI;

use debias_core::{Error, Result, TruncationLaw};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::toy_lvm::ToyLvmSpec;

pub const DEFAULT_P_TILDE: f64 = 0.6;
pub const DEFAULT_MAX_COST: u64 = 1 << 30;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlmcSpec {
    /// Base level; `I_j` averages `2^j` weights.
    pub j: u32,
    pub p_tilde: f64,
    /// Centre parameter of the proposal `N((y + theta_star 1)/2, 2/3 I)`.
    pub theta_star: f64,
    /// Largest admissible number of proposal draws for one estimate.
    pub max_cost: u64,
}

impl MlmcSpec {
    pub fn new(j: u32, p_tilde: f64, theta_star: f64) -> Result<Self> {
        if !(p_tilde > 0.0 && p_tilde < 1.0) {
            return Err(Error::domain(format!("p_tilde must lie in (0, 1), got {p_tilde}")));
        }
        if !theta_star.is_finite() {
            return Err(Error::domain("theta_star must be finite"));
        }
        Ok(Self { j, p_tilde, theta_star, max_cost: DEFAULT_MAX_COST })
    }

    pub fn with_max_cost(mut self, max_cost: u64) -> Self {
        self.max_cost = max_cost;
        self
    }

    /// `E[2^(j+1+R)] = 2^(j+1) p / (2p - 1)`, infinite for `p <= 1/2`.
    pub fn expected_cost(&self) -> f64 {
        if self.p_tilde <= 0.5 {
            f64::INFINITY
        } else {
            2f64.powi(self.j as i32 + 1) * self.p_tilde / (2.0 * self.p_tilde - 1.0)
        }
    }
}

/// Base level whose expected cost is closest (on a log scale) to `budget`.
pub fn level_for_budget(budget: f64, p_tilde: f64) -> Result<u32> {
    if !(p_tilde > 0.5 && p_tilde < 1.0) {
        return Err(Error::domain(format!("finite expected cost needs p_tilde in (0.5, 1), got {p_tilde}")));
    }
    let base = 2.0 * p_tilde / (2.0 * p_tilde - 1.0);
    if !(budget >= base * (1.0 - 1e-12)) {
        return Err(Error::domain(format!("budget {budget} is below the level-0 cost {base}")));
    }
    Ok((budget / base).log2().round().max(0.0) as u32)
}

/// Log importance weight `log p(z, y | theta) - log q(z)` of a proposal draw.
#[derive(Debug, Clone)]
pub struct WeightSampler<'a> {
    spec: &'a ToyLvmSpec,
    centre: Vec<f64>,
}

const PROPOSAL_VAR: f64 = 2.0 / 3.0;

impl<'a> WeightSampler<'a> {
    pub fn new(spec: &'a ToyLvmSpec, theta_star: f64) -> Self {
        let centre = spec.y.iter().map(|y| (y + theta_star) / 2.0).collect();
        Self { spec, centre }
    }

    pub fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let sd = PROPOSAL_VAR.sqrt();
        let (mut prior, mut lik, mut prop) = (0.0, 0.0, 0.0);
        for (c, y) in self.centre.iter().zip(&self.spec.y) {
            let e: f64 = rng.sample(StandardNormal);
            let z = c + sd * e;
            prior += (z - self.spec.theta).powi(2);
            lik += (y - z).powi(2);
            prop += e * e;
        }
        let d = self.spec.d as f64;
        // log N(z; theta, I) + log N(y; z, I) - log N(z; c, 2/3 I)
        -0.5 * d * (2.0 * PI).ln() - 0.5 * (prior + lik) + 0.5 * d * PROPOSAL_VAR.ln() + 0.5 * prop
    }
}

/// Streaming `log(mean(exp(x_i)))`.
#[derive(Debug, Clone, Copy)]
struct LogMeanExp {
    max: f64,
    sum: f64,
    n: u64,
}

impl LogMeanExp {
    fn new() -> Self {
        Self { max: f64::NEG_INFINITY, sum: 0.0, n: 0 }
    }

    fn push(&mut self, x: f64) {
        if x > self.max {
            self.sum = self.sum * (self.max - x).exp() + 1.0;
            self.max = x;
        } else {
            self.sum += (x - self.max).exp();
        }
        self.n += 1;
    }

    fn value(&self) -> f64 {
        self.max + self.sum.ln() - (self.n as f64).ln()
    }
}

/// IWAE estimate `log 2^-level sum_h w(Z_h)`.
pub fn iwae_estimate<R: Rng + ?Sized>(spec: &ToyLvmSpec, theta_star: f64, level: u32, rng: &mut R) -> f64 {
    let sampler = WeightSampler::new(spec, theta_star);
    let mut acc = LogMeanExp::new();
    for _ in 0..1u64 << level {
        acc.push(sampler.draw(rng));
    }
    acc.value()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MlmcEstimate {
    pub estimate: f64,
    /// Drawn `R~`.
    pub level: usize,
    /// Proposal draws, `2^(j+1+R~)`.
    pub cost: u64,
}

/// Telescoped estimate from a stream of log-weights, given the drawn `R~`:
///
/// ```text
/// I_j + sum_{k=0}^{R~} Delta_k / P(R~ >= k),
/// Delta_k = I_{j+k+1} - (I^E_{j+k} + I^O_{j+k}) / 2
/// ```
///
/// Every level uses a prefix of the same `2^(j+1+R~)` weights; `I^E` and
/// `I^O` split that prefix into even and odd positions.
pub fn mlmc_from_log_weights<F: FnMut() -> f64>(j: u32, law: &TruncationLaw<f64>, r_tilde: usize, mut next: F) -> f64 {
    let total = 1u64 << (j as usize + 1 + r_tilde);
    let base = 1u64 << j;
    let (mut all, mut even, mut odd) = (LogMeanExp::new(), LogMeanExp::new(), LogMeanExp::new());
    let mut estimate = 0.0;
    let mut next_level = 2 * base;
    let mut k = 0;
    for idx in 0..total {
        let lw = next();
        all.push(lw);
        if idx % 2 == 0 {
            even.push(lw);
        } else {
            odd.push(lw);
        }
        let seen = idx + 1;
        if seen == base {
            estimate += all.value();
        }
        if seen == next_level {
            let delta = all.value() - (even.value() + odd.value()) / 2.0;
            estimate += delta / law.survival(k);
            k += 1;
            next_level *= 2;
        }
    }
    estimate
}

pub fn mlmc_log_likelihood<R: Rng + ?Sized>(spec: &ToyLvmSpec, mlmc: &MlmcSpec, rng: &mut R) -> Result<MlmcEstimate> {
    let law = TruncationLaw::new(mlmc.p_tilde)?;
    let r_tilde = law.sample(rng)?;
    let exponent = mlmc.j as usize + 1 + r_tilde;
    let cost = if exponent < 64 { 1u64 << exponent } else { u64::MAX };
    if cost > mlmc.max_cost {
        return Err(Error::resource(format!(
            "MLMC level R~ = {r_tilde} needs {cost} proposal draws, cap is {}",
            mlmc.max_cost
        )));
    }
    let sampler = WeightSampler::new(spec, mlmc.theta_star);
    let estimate = mlmc_from_log_weights(mlmc.j, &law, r_tilde, || sampler.draw(rng));
    Ok(MlmcEstimate { estimate, level: r_tilde, cost })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_weights_telescope_to_base_level() {
        let law = TruncationLaw::new(0.6).unwrap();
        for j in 0..3 {
            for r in 0..5 {
                let v = mlmc_from_log_weights(j, &law, r, || -1.25);
                assert!((v + 1.25).abs() < 1e-12, "j={j} r={r}: {v}");
            }
        }
    }

    #[test]
    fn explicit_two_level_value() {
        // j = 0, R~ = 0: I_0 = w1, Delta_0 = log((e^a+e^b)/2) - (a+b)/2
        let law = TruncationLaw::new(0.6).unwrap();
        let vals = [0.3, -0.9];
        let mut it = vals.iter().copied();
        let v = mlmc_from_log_weights(0, &law, 0, || it.next().unwrap());
        let want = 0.3 + ((0.3f64.exp() + (-0.9f64).exp()) / 2.0).ln() - (0.3 - 0.9) / 2.0;
        assert!((v - want).abs() < 1e-14);
    }

    #[test]
    fn log_mean_exp_is_stable() {
        let mut a = LogMeanExp::new();
        for x in [-1000.0, -1001.0, -999.0] {
            a.push(x);
        }
        let want = -1000.0 + ((1.0 + (-1.0f64).exp() + 1f64.exp()) / 3.0).ln();
        assert!((a.value() - want).abs() < 1e-12);
    }

    #[test]
    fn budgets_map_to_levels() {
        assert_eq!(level_for_budget(6.0, 0.6).unwrap(), 0);
        assert_eq!(level_for_budget(96.0, 0.6).unwrap(), 4);
        assert!(level_for_budget(6.0, 0.5).is_err());
        let s = MlmcSpec::new(4, 0.6, 0.0).unwrap();
        assert!((s.expected_cost() - 96.0).abs() < 1e-12);
    }

    #[test]
    fn cost_cap_is_enforced() {
        let spec = ToyLvmSpec::at_mean(2, 1.0).unwrap();
        let mlmc = MlmcSpec::new(3, 0.6, 1.0).unwrap().with_max_cost(8);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(1);
        let err = mlmc_log_likelihood(&spec, &mlmc, &mut rng).unwrap_err();
        assert!(matches!(err, Error::ResourceExceeded(_)));
    }
}
