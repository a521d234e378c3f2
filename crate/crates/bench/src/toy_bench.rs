//! Toy-LVM benchmark: summed log-likelihood over a data set from the Taylor
//! estimators and the MLMC baseline at matched expected cost.

use std::fmt;
use std::str::FromStr;

use debias_core::rng::{purpose_rng, purpose_seed, replicate_rng};
use debias_core::{CoefficientKind, Error, Expansion, Result, SumEstimator, TruncationLaw, DEFAULT_R_MAX};
use serde::{Deserialize, Serialize};

use crate::mlmc::{level_for_budget, mlmc_log_likelihood, MlmcSpec, DEFAULT_MAX_COST, DEFAULT_P_TILDE};
use crate::parallel::map_indexed;
use crate::records::Record;
use crate::toy_lvm::{dataset_mle, sample_dataset, ToyLvmSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BenchMethod {
    Simple,
    Cycling,
    Mvue,
    Mlmc,
}

impl BenchMethod {
    pub const ALL: [BenchMethod; 4] = [BenchMethod::Simple, BenchMethod::Cycling, BenchMethod::Mvue, BenchMethod::Mlmc];

    pub fn name(self) -> &'static str {
        match self {
            BenchMethod::Simple => "simple",
            BenchMethod::Cycling => "cycling",
            BenchMethod::Mvue => "mvue",
            BenchMethod::Mlmc => "mlmc",
        }
    }

    pub fn taylor(self) -> Option<CoefficientKind> {
        match self {
            BenchMethod::Simple => Some(CoefficientKind::Simple),
            BenchMethod::Cycling => Some(CoefficientKind::Cycling),
            BenchMethod::Mvue => Some(CoefficientKind::Mvue),
            BenchMethod::Mlmc => None,
        }
    }
}

impl fmt::Display for BenchMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for BenchMethod {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "mlmc" => Ok(BenchMethod::Mlmc),
            other => other.parse::<CoefficientKind>().map(|k| match k {
                CoefficientKind::Simple => BenchMethod::Simple,
                CoefficientKind::Cycling => BenchMethod::Cycling,
                CoefficientKind::Mvue => BenchMethod::Mvue,
            }),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLvmBenchConfig {
    pub d: usize,
    /// Number of observations.
    pub n: usize,
    pub theta: f64,
    /// Expected number of latent draws per observation.
    pub budget: f64,
    pub methods: Vec<BenchMethod>,
    pub replicates: u64,
    pub seed: u64,
    #[serde(default = "default_p_tilde")]
    pub p_tilde: f64,
    #[serde(default = "default_max_cost")]
    pub max_cost: u64,
    /// Observations; drawn from the model under `seed` when absent.
    #[serde(default)]
    pub data: Option<Vec<Vec<f64>>>,
}

fn default_p_tilde() -> f64 {
    DEFAULT_P_TILDE
}

fn default_max_cost() -> u64 {
    DEFAULT_MAX_COST
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToyLvmBench {
    pub data: Vec<Vec<f64>>,
    /// `sum_i log p(y_i | theta)`.
    pub truth: f64,
    pub theta_star: f64,
    /// Truncation parameter of the Taylor methods, `1 / (budget + 1)`.
    pub taylor_p: f64,
    pub mlmc_level: u32,
    pub mlmc_expected_cost: f64,
    pub records: Vec<Record>,
}

pub fn run_toy_lvm_bench(config: &ToyLvmBenchConfig) -> Result<ToyLvmBench> {
    if config.d == 0 || config.n == 0 {
        return Err(Error::domain("toy LVM bench needs d >= 1 and n >= 1"));
    }
    if !(config.budget > 0.0) {
        return Err(Error::domain(format!("budget must be positive, got {}", config.budget)));
    }
    let data = match &config.data {
        Some(data) => data.clone(),
        None => sample_dataset(config.d, config.n, config.theta, &mut purpose_rng(config.seed, "dataset")),
    };
    let specs: Vec<ToyLvmSpec> =
        data.iter().map(|y| ToyLvmSpec::new(config.d, config.theta, y.clone())).collect::<Result<_>>()?;
    let truth: f64 = specs.iter().map(ToyLvmSpec::log_m).sum();
    let theta_star = dataset_mle(&data);
    let taylor_p = 1.0 / (config.budget + 1.0);
    let law = TruncationLaw::new(taylor_p)?.with_r_max(DEFAULT_R_MAX);
    let needs_mlmc = config.methods.contains(&BenchMethod::Mlmc);
    let mlmc = if needs_mlmc {
        let j = level_for_budget(config.budget, config.p_tilde)?;
        Some(MlmcSpec::new(j, config.p_tilde, theta_star)?.with_max_cost(config.max_cost))
    } else {
        None
    };
    let expansions: Vec<Expansion<f64>> =
        specs.iter().map(|s| Expansion::log(s.moments().x0_star)).collect::<Result<_>>()?;

    let mut records = Vec::new();
    for &method in &config.methods {
        let stream = purpose_seed(config.seed, method.name());
        let rows = map_indexed(config.replicates, |i| {
            let (seed, mut rng) = replicate_rng(stream, i);
            let mut run = || -> Result<(f64, u64, u64)> {
                let (mut total, mut level, mut cost) = (0.0, 0u64, 0u64);
                for (spec, exp) in specs.iter().zip(&expansions) {
                    match method.taylor() {
                        Some(kind) => {
                            let est = SumEstimator::new(exp.clone(), law, kind);
                            let e = est.estimate(&mut spec.clone(), &mut rng)?;
                            total += e.value;
                            level += e.r as u64;
                            cost += e.samples_used as u64;
                        }
                        None => {
                            let e = mlmc_log_likelihood(spec, mlmc.as_ref().expect("mlmc spec"), &mut rng)?;
                            total += e.estimate;
                            level += e.level as u64;
                            cost = cost.saturating_add(e.cost);
                        }
                    }
                }
                Ok((total, level, cost))
            };
            match run() {
                Ok((v, l, c)) => Record::ok(method.name(), i, v, l, c, seed),
                Err(e) => Record::failed(method.name(), i, seed, e),
            }
        });
        records.extend(rows);
    }
    Ok(ToyLvmBench {
        data,
        truth,
        theta_star,
        taylor_p,
        mlmc_level: mlmc.map(|m| m.j).unwrap_or(0),
        mlmc_expected_cost: mlmc.map(|m| m.expected_cost()).unwrap_or(f64::NAN),
        records,
    })
}
