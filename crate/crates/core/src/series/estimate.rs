use rand::Rng;
use serde::{Deserialize, Serialize};

use super::coeffs::{cycling_gradient_coeffs, simple_gradient_coeffs, CoefficientKind};
use super::{Expansion, PairSource, SampleSource, TruncationLaw};
use crate::{Error, Result, Scalar};

/// One draw of the sum estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SumEstimate<T> {
    pub value: T,
    /// Drawn truncation index.
    pub r: usize,
    /// Number of `X_i` consumed, equal to `r`.
    pub samples_used: usize,
    /// Replicate seed, filled in by replicate drivers (0 otherwise).
    pub seed: u64,
}

/// One draw of the gradient sum estimator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientEstimate<T> {
    pub value: Vec<T>,
    /// Drawn truncation index, `>= 1`.
    pub r: usize,
    pub samples_used: usize,
    pub seed: u64,
}

/// Sum estimator
///
/// ```text
/// f_hat = sum_{k=0}^{R} gamma_k u_{R,k} / P(R >= k)
/// ```
///
/// with `u_{R,k}` from the chosen [`CoefficientKind`].
#[derive(Debug, Clone)]
pub struct SumEstimator<T: Scalar> {
    pub expansion: Expansion<T>,
    pub law: TruncationLaw<T>,
    pub kind: CoefficientKind,
}

impl<T: Scalar> SumEstimator<T> {
    pub fn new(expansion: Expansion<T>, law: TruncationLaw<T>, kind: CoefficientKind) -> Self {
        Self { expansion, law, kind }
    }

    /// Draws `R`, consumes `R` samples and returns the estimate.
    pub fn estimate<S, R>(&self, source: &mut S, rng: &mut R) -> Result<SumEstimate<T>>
    where
        S: SampleSource<T> + ?Sized,
        R: Rng + ?Sized,
    {
        let r = self.law.sample(rng)?;
        self.estimate_given_r(r, source, rng)
    }

    /// The estimator conditioned on `R = r`.
    pub fn estimate_given_r<S, R>(&self, r: usize, source: &mut S, rng: &mut R) -> Result<SumEstimate<T>>
    where
        S: SampleSource<T> + ?Sized,
        R: Rng + ?Sized,
    {
        let mut xs = Vec::with_capacity(r);
        source.fill(rng, r, &mut xs)?;
        let value = self.estimate_from_samples(&xs)?;
        Ok(SumEstimate { value, r, samples_used: r, seed: 0 })
    }

    /// Estimate from an explicit batch `x_1..x_r` (so `R = r`).
    pub fn estimate_from_samples(&self, xs: &[T]) -> Result<T> {
        let u = self.kind.coeffs(xs, self.expansion.x0());
        self.assemble(&u)
    }

    /// `sum_k gamma_k u[k] / P(R >= k)`. Exact zeros in `u` are skipped so
    /// that an underflowed survival weight cannot turn them into NaN.
    pub fn assemble(&self, u: &[T]) -> Result<T> {
        let mut total = T::zero();
        for ((k, &uk), inv_surv) in u.iter().enumerate().zip(self.law.inverse_survivals()) {
            if uk == T::zero() {
                continue;
            }
            let gamma = self.expansion.coefficient(k)?;
            total = total + gamma * uk * inv_surv;
        }
        if !total.is_finite() {
            return Err(Error::NonFinite(format!(
                "{} estimate with R = {} evaluated to {total}",
                self.kind.name(),
                u.len().saturating_sub(1)
            )));
        }
        Ok(total)
    }
}

/// `sum_estimate(expansion, law, kind, source, rng)`.
pub fn sum_estimate<T, S, R>(
    expansion: &Expansion<T>,
    law: &TruncationLaw<T>,
    kind: CoefficientKind,
    source: &mut S,
    rng: &mut R,
) -> Result<SumEstimate<T>>
where
    T: Scalar,
    S: SampleSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    SumEstimator::new(expansion.clone(), *law, kind).estimate(source, rng)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GradientKind {
    Simple,
    Cycling,
}

impl GradientKind {
    pub fn name(self) -> &'static str {
        match self {
            GradientKind::Simple => "simple",
            GradientKind::Cycling => "cycling",
        }
    }
}

impl TryFrom<CoefficientKind> for GradientKind {
    type Error = Error;

    fn try_from(kind: CoefficientKind) -> Result<Self> {
        match kind {
            CoefficientKind::Simple => Ok(GradientKind::Simple),
            CoefficientKind::Cycling => Ok(GradientKind::Cycling),
            CoefficientKind::Mvue => Err(Error::domain("no MVUE gradient estimator")),
        }
    }
}

/// Gradient sum estimator of `grad_theta f(m(theta))`:
///
/// ```text
/// sum_{k=1}^{R} (k gamma_k / x0) w_{R,k} / P(R >= k | R >= 1)
/// ```
///
/// `R` is drawn from the truncation law conditioned on `R >= 1`, so
/// `P(R >= k | R >= 1) = (1-p)^(k-1)`.
#[derive(Debug, Clone)]
pub struct GradientEstimator<T: Scalar> {
    pub expansion: Expansion<T>,
    pub law: TruncationLaw<T>,
    pub kind: GradientKind,
}

impl<T: Scalar> GradientEstimator<T> {
    pub fn new(expansion: Expansion<T>, law: TruncationLaw<T>, kind: GradientKind) -> Self {
        Self { expansion, law, kind }
    }

    pub fn estimate<S, R>(&self, source: &mut S, rng: &mut R) -> Result<GradientEstimate<T>>
    where
        S: PairSource<T> + ?Sized,
        R: Rng + ?Sized,
    {
        let r = self.law.sample_positive(rng)?;
        self.estimate_given_r(r, source, rng)
    }

    pub fn estimate_given_r<S, R>(&self, r: usize, source: &mut S, rng: &mut R) -> Result<GradientEstimate<T>>
    where
        S: PairSource<T> + ?Sized,
        R: Rng + ?Sized,
    {
        if r == 0 {
            return Err(Error::domain("gradient estimator needs R >= 1"));
        }
        let dim = source.dim();
        let mut xs = Vec::with_capacity(r);
        let mut gs = vec![T::zero(); r * dim];
        for row in gs.chunks_mut(dim.max(1)).take(r) {
            xs.push(source.draw_pair(rng, &mut row[..dim])?);
        }
        let value = self.estimate_from_samples(&xs, &gs, dim)?;
        Ok(GradientEstimate { value, r, samples_used: r, seed: 0 })
    }

    /// Estimate from explicit pairs; `gs` is `r x dim`, row-major.
    pub fn estimate_from_samples(&self, xs: &[T], gs: &[T], dim: usize) -> Result<Vec<T>> {
        let x0 = self.expansion.x0();
        let w = match self.kind {
            GradientKind::Simple => simple_gradient_coeffs(xs, gs, dim, x0),
            GradientKind::Cycling => cycling_gradient_coeffs(xs, gs, dim, x0),
        };
        let mut total = vec![T::zero(); dim];
        for (k, inv_surv) in (1..=xs.len()).zip(self.law.inverse_survivals()) {
            let row = &w[(k - 1) * dim..k * dim];
            if row.iter().all(|&v| v == T::zero()) {
                continue;
            }
            // P(R >= k | R >= 1) = P(R >= k - 1)
            let weight = T::from_usize_lossy(k) * self.expansion.coefficient(k)? * inv_surv / x0;
            for (t, &v) in total.iter_mut().zip(row) {
                *t = *t + weight * v;
            }
        }
        if total.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!(
                "{} gradient estimate with R = {} is not finite",
                self.kind.name(),
                xs.len()
            )));
        }
        Ok(total)
    }
}

/// `gradient_sum_estimate(expansion, law, kind, pair_source, rng)`.
pub fn gradient_sum_estimate<T, S, R>(
    expansion: &Expansion<T>,
    law: &TruncationLaw<T>,
    kind: GradientKind,
    source: &mut S,
    rng: &mut R,
) -> Result<GradientEstimate<T>>
where
    T: Scalar,
    S: PairSource<T> + ?Sized,
    R: Rng + ?Sized,
{
    GradientEstimator::new(expansion.clone(), *law, kind).estimate(source, rng)
}
