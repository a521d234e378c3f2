//! End-to-end estimation: optional pilot-run tuning, then independent
//! replicates of the sum (or gradient) estimator.

use debias_core::rng::{purpose_rng, replicate_rng};
use debias_core::series::{ReplayPairSource, ReplaySource};
use debias_core::tuning::{beta_squared, bootstrap_x0, choose_p, PilotSummary, DEFAULT_ALPHA, DEFAULT_N_BOOT};
use debias_core::{
    CoefficientKind, Error, Expansion, GradientEstimator, GradientKind, Result, SampleSource, SumEstimator,
    TruncationLaw, DEFAULT_R_MAX,
};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::parallel::map_indexed;
use crate::records::Record;
use crate::study::StudySource;
use crate::toy_lvm::ToyLvmSpec;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum FunctionSpec {
    Log,
    Reciprocal,
    /// Coefficients `gamma_0, gamma_1, ...` for a fixed expansion point.
    Custom {
        c: f64,
        gammas: Vec<f64>,
    },
}

impl FunctionSpec {
    pub fn expansion(&self, x0: f64) -> Result<Expansion<f64>> {
        match self {
            FunctionSpec::Log => Expansion::log(x0),
            FunctionSpec::Reciprocal => Expansion::reciprocal(x0),
            FunctionSpec::Custom { c, gammas } => Expansion::custom_table(x0, *c, gammas.clone()),
        }
    }
}

/// Where samples come from.
#[derive(Debug, Clone, PartialEq)]
pub enum RunSource {
    Gaussian {
        mean: f64,
        var: f64,
    },
    ToyLvm(ToyLvmSpec),
    /// Recorded scalar draws, consumed in order: pilot first, then replicate 0, 1, ...
    Replay(Vec<f64>),
    /// Recorded `(X, G)` pairs; `gs` is row-major with `dim` columns.
    ReplayPairs {
        dim: usize,
        xs: Vec<f64>,
        gs: Vec<f64>,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateConfig {
    pub function: FunctionSpec,
    pub estimator: CoefficientKind,
    #[serde(default)]
    pub gradient: bool,
    /// `None` tunes `x0` on a pilot run.
    pub x0: Option<f64>,
    /// `None` applies the p rule to the pilot run.
    pub p: Option<f64>,
    pub n0: usize,
    pub alpha: f64,
    pub n_boot: usize,
    pub replicates: u64,
    pub seed: u64,
    pub r_max: usize,
}

impl Default for EstimateConfig {
    fn default() -> Self {
        Self {
            function: FunctionSpec::Log,
            estimator: CoefficientKind::Cycling,
            gradient: false,
            x0: None,
            p: None,
            n0: 10,
            alpha: DEFAULT_ALPHA,
            n_boot: DEFAULT_N_BOOT,
            replicates: 1,
            seed: 0,
            r_max: DEFAULT_R_MAX,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateRun {
    pub pilot: Option<PilotSummary<f64>>,
    pub x0: f64,
    pub p: f64,
    /// Samples consumed by the pilot run.
    pub pilot_cost: u64,
    /// Pilot plus every replicate's samples.
    pub total_cost: u64,
    pub records: Vec<Record>,
    /// First replicate failure, if any.
    #[serde(skip)]
    pub first_error: Option<Error>,
}

impl EstimateRun {
    /// Replicates whose estimate failed.
    pub fn failures(&self) -> u64 {
        let mut seen = std::collections::BTreeSet::new();
        self.records.iter().filter(|r| r.error.is_some() && seen.insert(r.replicate)).count() as u64
    }
}

impl RunSource {
    fn study(&self) -> Option<StudySource> {
        match self {
            RunSource::Gaussian { mean, var } => Some(StudySource::Gaussian { m: *mean, var: *var }),
            RunSource::ToyLvm(spec) => Some(StudySource::ToyLvm { spec: spec.clone() }),
            _ => None,
        }
    }

    fn pilot<R: Rng + ?Sized>(&self, n0: usize, gradient: bool, rng: &mut R) -> Result<Vec<f64>> {
        match self {
            RunSource::Replay(values) => values.get(..n0).map(<[f64]>::to_vec).ok_or_else(|| {
                Error::resource(format!(
                    "sample stream exhausted: pilot needs {n0} samples, only {} available",
                    values.len()
                ))
            }),
            RunSource::ReplayPairs { dim, xs, gs } => ReplayPairSource::new(*dim, xs.clone(), gs.clone())?.take_xs(n0),
            RunSource::ToyLvm(spec) if gradient => Ok((0..n0).map(|_| spec.sample_pair(rng).0).collect()),
            other => {
                let mut src = other.study().expect("synthetic source");
                let mut out = Vec::with_capacity(n0);
                src.fill(rng, n0, &mut out)?;
                Ok(out)
            }
        }
    }
}

fn resolve_tuning(config: &EstimateConfig, source: &RunSource) -> Result<(f64, f64, Option<PilotSummary<f64>>, u64)> {
    if let (Some(x0), Some(p)) = (config.x0, config.p) {
        return Ok((x0, p, None, 0));
    }
    if config.x0.is_none() && matches!(config.function, FunctionSpec::Custom { .. }) {
        return Err(Error::domain("custom coefficients are tied to one expansion point; pass an explicit x0"));
    }
    let summary = run_tune(config, source)?;
    let x0 = config.x0.unwrap_or(summary.x0_chosen);
    let p = match config.p {
        Some(p) => p,
        None if config.x0.is_none() => summary.p_chosen,
        None => choose_p(beta_squared(summary.m_hat, summary.var_hat, x0)?, config.n0)?,
    };
    Ok((x0, p, Some(summary), config.n0 as u64))
}

type Rows = (Vec<Record>, Option<Error>);

fn gradient_records(kind: GradientKind, i: u64, seed: u64, out: Result<debias_core::GradientEstimate<f64>>) -> Rows {
    match out {
        Ok(e) => (
            e.value
                .iter()
                .enumerate()
                .map(|(j, v)| {
                    Record::ok(format!("{}-grad[{j}]", kind.name()), i, *v, e.r as u64, e.samples_used as u64, seed)
                })
                .collect(),
            None,
        ),
        Err(err) => (vec![Record::failed(format!("{}-grad", kind.name()), i, seed, &err)], Some(err)),
    }
}

/// Pilot run and tuning report, on the same stream [`run_estimate`] uses.
pub fn run_tune(config: &EstimateConfig, source: &RunSource) -> Result<PilotSummary<f64>> {
    let mut rng = purpose_rng(config.seed, "pilot");
    let pilot = source.pilot(config.n0, config.gradient, &mut rng)?;
    bootstrap_x0(&pilot, config.alpha, config.n_boot, &mut rng)
}

pub fn run_estimate(config: &EstimateConfig, source: &RunSource) -> Result<EstimateRun> {
    let (x0, p, pilot, pilot_cost) = resolve_tuning(config, source)?;
    let expansion = config.function.expansion(x0)?;
    let law = TruncationLaw::new(p)?.with_r_max(config.r_max);
    let skip = pilot_cost as usize;

    let rows: Vec<Rows> = if config.gradient {
        let kind = GradientKind::try_from(config.estimator)?;
        let est = GradientEstimator::new(expansion, law, kind);
        match source {
            RunSource::ReplayPairs { dim, xs, gs } => {
                let mut src = ReplayPairSource::new(*dim, xs.clone(), gs.clone())?;
                src.take_xs(skip)?;
                (0..config.replicates)
                    .map(|i| {
                        let (seed, mut rng) = replicate_rng(config.seed, i);
                        gradient_records(kind, i, seed, est.estimate(&mut src, &mut rng))
                    })
                    .collect()
            }
            RunSource::ToyLvm(spec) => map_indexed(config.replicates, |i| {
                let (seed, mut rng) = replicate_rng(config.seed, i);
                gradient_records(kind, i, seed, est.estimate(&mut spec.clone(), &mut rng))
            }),
            _ => return Err(Error::domain("gradient estimation needs a pair source (toy-lvm or stdin pairs)")),
        }
    } else {
        let est = SumEstimator::new(expansion, law, config.estimator);
        let name = config.estimator.name();
        let record = |i: u64, seed: u64, out: Result<debias_core::SumEstimate<f64>>| match out {
            Ok(e) => (vec![Record::ok(name, i, e.value, e.r as u64, e.samples_used as u64, seed)], None),
            Err(err) => (vec![Record::failed(name, i, seed, &err)], Some(err)),
        };
        match source {
            RunSource::Replay(values) => {
                let mut src = ReplaySource::new(values[skip.min(values.len())..].to_vec());
                (0..config.replicates)
                    .map(|i| {
                        let (seed, mut rng) = replicate_rng(config.seed, i);
                        record(i, seed, est.estimate(&mut src, &mut rng))
                    })
                    .collect()
            }
            RunSource::ReplayPairs { .. } => {
                return Err(Error::domain("pair input needs gradient mode"));
            }
            other => {
                let synthetic = other.study().expect("synthetic source");
                map_indexed(config.replicates, |i| {
                    let (seed, mut rng) = replicate_rng(config.seed, i);
                    record(i, seed, est.estimate(&mut synthetic.clone(), &mut rng))
                })
            }
        }
    };
    let mut first_error = None;
    let mut records = Vec::with_capacity(rows.len());
    for (recs, err) in rows {
        records.extend(recs);
        if first_error.is_none() {
            first_error = err;
        }
    }
    let sampled: u64 = {
        let mut seen = std::collections::BTreeSet::new();
        records.iter().filter(|r| seen.insert(r.replicate)).map(|r| r.cost).sum()
    };
    Ok(EstimateRun { pilot, x0, p, pilot_cost, total_cost: pilot_cost + sampled, records, first_error })
}
