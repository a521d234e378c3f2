//! Variance study: empirical moments of the sum estimators over a grid of
//! truncation parameters, side by side with the closed-form bounds.

use debias_core::oracle::{prop1_bounds, prop2_bound, prop3_bound, simple_variance_limit, MomentParams};
use debias_core::rng::{purpose_seed, replicate_rng};
use debias_core::{
    CoefficientKind, Error, Expansion, ExpansionKind, Result, SampleSource, SumEstimator, TruncationLaw, DEFAULT_R_MAX,
};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::parallel::map_indexed;
use crate::toy_lvm::ToyLvmSpec;

/// Sources with known `(m, var)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum StudySource {
    Gaussian { m: f64, var: f64 },
    ToyLvm { spec: ToyLvmSpec },
}

impl StudySource {
    pub fn moments(&self) -> (f64, f64) {
        match self {
            StudySource::Gaussian { m, var } => (*m, *var),
            StudySource::ToyLvm { spec } => {
                let mo = spec.moments();
                (mo.m, mo.var)
            }
        }
    }
}

impl SampleSource<f64> for StudySource {
    fn draw<R: Rng + ?Sized>(&mut self, rng: &mut R) -> Result<f64> {
        Ok(match self {
            StudySource::Gaussian { m, var } => {
                if *var == 0.0 {
                    *m
                } else {
                    *m + var.sqrt() * rng.sample::<f64, _>(StandardNormal)
                }
            }
            StudySource::ToyLvm { spec } => spec.sample_x(rng),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VarianceStudyConfig {
    pub function: ExpansionKind,
    pub source: StudySource,
    /// Expansion point; `None` uses the exact minimiser `(m^2 + var) / m`.
    pub x0: Option<f64>,
    pub p_grid: Vec<f64>,
    pub estimators: Vec<CoefficientKind>,
    pub replicates: u64,
    pub seed: u64,
    /// Pilot size charged in the work-normalised variance.
    #[serde(default)]
    pub n0: usize,
    #[serde(default = "default_r_max")]
    pub r_max: usize,
}

fn default_r_max() -> usize {
    DEFAULT_R_MAX
}

/// One `(estimator, p)` cell of the study.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StudyRow {
    pub function: String,
    pub estimator: String,
    pub p: f64,
    pub x0: f64,
    pub replicates: u64,
    pub failures: u64,
    pub target: f64,
    pub mean: f64,
    pub mean_se: f64,
    pub variance: f64,
    pub variance_se: f64,
    /// Estimate of `E[var(f_hat | R)]` from two independent sample sets per `R`.
    pub e_var_given_r: f64,
    pub e_var_given_r_se: f64,
    pub mean_r: f64,
    /// `(n0 + E[R]) * variance`.
    pub wnv: f64,
    pub prop1_upper: Option<f64>,
    /// Bound on `E[var(f_hat | R)]` for the simple and cycling estimators.
    pub var_bound: Option<f64>,
    /// `p -> 0` limit of `E[var(f_hat^S | R)]` (reciprocal only).
    pub simple_limit: Option<f64>,
    pub error: Option<String>,
}

fn mean_and_se(xs: &[f64]) -> (f64, f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { f64::NAN };
    (mean, (var / n).sqrt(), var)
}

fn expansion_for(kind: ExpansionKind, x0: f64) -> Result<Expansion<f64>> {
    match kind {
        ExpansionKind::Log => Expansion::log(x0),
        ExpansionKind::Reciprocal => Expansion::reciprocal(x0),
        ExpansionKind::Custom => Err(Error::domain("variance study supports log and reciprocal only")),
    }
}

pub fn run_variance_study(config: &VarianceStudyConfig) -> Result<Vec<StudyRow>> {
    let (m, var) = config.source.moments();
    let x0 = match config.x0 {
        Some(x) => x,
        None => debias_core::tuning::x0_star(m, var)?,
    };
    let expansion = expansion_for(config.function, x0)?;
    let params = MomentParams::new(m, var, x0)?;
    let (beta0, beta) = (params.beta0(), params.beta());
    let target = expansion.target(m).ok_or_else(|| Error::domain(format!("target undefined at m = {m}")))?;
    let c = expansion.c();
    let simple_limit = match config.function {
        ExpansionKind::Reciprocal => simple_variance_limit(&params).ok(),
        _ => None,
    };

    let mut rows = Vec::new();
    for &p in &config.p_grid {
        let law = TruncationLaw::new(p)?.with_r_max(config.r_max);
        for &kind in &config.estimators {
            let est = SumEstimator::new(expansion.clone(), law, kind);
            let stream = purpose_seed(config.seed, &format!("{}@{p:?}", kind.name()));
            let draws = map_indexed(config.replicates, |i| {
                let (_, mut rng) = replicate_rng(stream, i);
                let mut src = config.source.clone();
                let r = law.sample(&mut rng)?;
                let a = est.estimate_given_r(r, &mut src, &mut rng)?.value;
                let b = est.estimate_given_r(r, &mut src, &mut rng)?.value;
                Ok::<_, Error>((a, (a - b) * (a - b) / 2.0, r))
            });
            let mut vals = Vec::with_capacity(draws.len());
            let mut halves = Vec::with_capacity(draws.len());
            let mut rs = Vec::with_capacity(draws.len());
            let mut first_error = None;
            for d in draws {
                match d {
                    Ok((a, h, r)) => {
                        vals.push(a);
                        halves.push(h);
                        rs.push(r as f64);
                    }
                    Err(e) => {
                        first_error.get_or_insert_with(|| e.to_string());
                    }
                }
            }
            let (mean, mean_se, variance) = mean_and_se(&vals);
            let dev: Vec<f64> = vals.iter().map(|v| (v - mean).powi(2)).collect();
            let (_, variance_se, _) = mean_and_se(&dev);
            let (e_var, e_var_se, _) = mean_and_se(&halves);
            let (mean_r, _, _) = mean_and_se(&rs);
            let var_bound = match kind {
                CoefficientKind::Simple => prop2_bound(p, beta, c).ok(),
                CoefficientKind::Cycling => prop3_bound(p, beta0, beta, c).ok(),
                CoefficientKind::Mvue => None,
            };
            let prop1_upper = prop1_bounds(p, beta0, c, target, expansion.coefficient(0)?).ok().map(|b| b.1);
            rows.push(StudyRow {
                function: config.function.name().to_string(),
                estimator: kind.name().to_string(),
                p,
                x0,
                replicates: config.replicates,
                failures: config.replicates - vals.len() as u64,
                target,
                mean,
                mean_se,
                variance,
                variance_se,
                e_var_given_r: e_var,
                e_var_given_r_se: e_var_se,
                mean_r,
                wnv: (config.n0 as f64 + law.mean()) * variance,
                prop1_upper,
                var_bound,
                simple_limit,
                error: first_error,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_variance_rows_have_no_conditional_variance() {
        let cfg = VarianceStudyConfig {
            function: ExpansionKind::Log,
            source: StudySource::Gaussian { m: 1.0, var: 0.0 },
            x0: Some(2.0),
            p_grid: vec![0.3],
            estimators: CoefficientKind::ALL.to_vec(),
            replicates: 200,
            seed: 1,
            n0: 0,
            r_max: DEFAULT_R_MAX,
        };
        let rows = run_variance_study(&cfg).unwrap();
        assert_eq!(rows.len(), 3);
        for row in rows {
            assert_eq!(row.e_var_given_r, 0.0);
            assert_eq!(row.failures, 0);
        }
    }
}
