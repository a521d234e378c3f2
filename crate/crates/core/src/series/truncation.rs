use rand::Rng;
use rand_distr::{Distribution, Geometric};

use crate::{Error, Result, Scalar};

/// Default cap on a single truncation draw.
pub const DEFAULT_R_MAX: usize = 1_000_000;

/// Geometric truncation law on `{0, 1, ...}`: `P(R = k) = (1-p)^k p`,
/// `P(R >= k) = (1-p)^k`.
///
/// A draw above `r_max` is reported as [`Error::ResourceExceeded`]; it is never
/// clipped, since clipping would bias every estimator built on the law.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TruncationLaw<T: Scalar> {
    p: T,
    r_max: usize,
    sampler: Geometric,
}

impl<T: Scalar> TruncationLaw<T> {
    pub fn new(p: T) -> Result<Self> {
        if !(p > T::zero() && p < T::one()) {
            return Err(Error::domain(format!("geometric parameter p must lie in (0, 1), got {p}")));
        }
        let sampler =
            Geometric::new(p.to_f64_lossy()).map_err(|e| Error::domain(format!("geometric parameter p = {p}: {e}")))?;
        Ok(Self { p, r_max: DEFAULT_R_MAX, sampler })
    }

    /// Law with mean `(1-p)/p = mean`.
    pub fn with_mean(mean: T) -> Result<Self> {
        if !(mean > T::zero() && mean.is_finite()) {
            return Err(Error::domain(format!("mean of the truncation law must be > 0, got {mean}")));
        }
        Self::new((T::one() + mean).recip())
    }

    pub fn with_r_max(mut self, r_max: usize) -> Self {
        self.r_max = r_max.min(i32::MAX as usize);
        self
    }

    pub fn p(&self) -> T {
        self.p
    }

    pub fn r_max(&self) -> usize {
        self.r_max
    }

    /// `E[R] = (1-p)/p`.
    pub fn mean(&self) -> T {
        (T::one() - self.p) / self.p
    }

    /// `var(R) = (1-p)/p^2`.
    pub fn variance(&self) -> T {
        (T::one() - self.p) / (self.p * self.p)
    }

    /// `P(R >= k) = (1-p)^k`.
    pub fn survival(&self, k: usize) -> T {
        pow_usize(T::one() - self.p, k)
    }

    /// `1 / P(R >= k)` for `k = 0, 1, ...`, built by repeated division and
    /// re-anchored on the exact power every [`RESYNC`] steps.
    pub fn inverse_survivals(&self) -> InverseSurvivals<T> {
        InverseSurvivals { law: *self, k: 0, w: T::one(), step: (T::one() - self.p).recip() }
    }

    /// `P(R = k) = (1-p)^k p`.
    pub fn mass(&self, k: usize) -> T {
        self.survival(k) * self.p
    }

    /// `P(R >= k | R >= 1) = (1-p)^(k-1)` for `k >= 1`.
    pub fn survival_given_positive(&self, k: usize) -> T {
        if k == 0 {
            T::one()
        } else {
            self.survival(k - 1)
        }
    }

    /// Draws `R`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let r = self.sampler.sample(rng);
        if r > self.r_max as u64 {
            return Err(Error::resource(format!("truncation draw R = {r} exceeds r_max = {}", self.r_max)));
        }
        Ok(r as usize)
    }

    /// Draws `R` conditioned on `R >= 1`, i.e. `1 + Geometric(p)`.
    pub fn sample_positive<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        let r = self.sampler.sample(rng).saturating_add(1);
        if r > self.r_max as u64 {
            return Err(Error::resource(format!("truncation draw R = {r} exceeds r_max = {}", self.r_max)));
        }
        Ok(r as usize)
    }
}

const RESYNC: usize = 64;

/// Iterator returned by [`TruncationLaw::inverse_survivals`].
#[derive(Debug, Clone)]
pub struct InverseSurvivals<T: Scalar> {
    law: TruncationLaw<T>,
    k: usize,
    w: T,
    step: T,
}

impl<T: Scalar> Iterator for InverseSurvivals<T> {
    type Item = T;

    fn next(&mut self) -> Option<T> {
        let out = if self.k.is_multiple_of(RESYNC) { self.law.survival(self.k).recip() } else { self.w * self.step };
        self.w = out;
        self.k += 1;
        Some(out)
    }
}

pub(crate) fn pow_usize<T: Scalar>(base: T, k: usize) -> T {
    if k <= i32::MAX as usize {
        base.powi(k as i32)
    } else {
        (base.ln() * T::from_usize_lossy(k)).exp()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn survival_values() {
        let law = TruncationLaw::new(0.5).unwrap();
        assert_eq!(law.survival(0), 1.0);
        assert_eq!(law.survival(2), 0.25);
        let law = TruncationLaw::new(1.0_f64 / 11.0).unwrap();
        assert!((law.survival(1) - 10.0 / 11.0).abs() < 1e-15);
        // survival(1) = sum_{r >= 1} mass(r)
        let tail: f64 = (1..2000).map(|r| law.mass(r)).sum();
        assert!((tail - law.survival(1)).abs() < 1e-12);
    }

    #[test]
    fn inverse_survivals_track_exact_powers() {
        let law = TruncationLaw::new(1e-3_f64).unwrap();
        for (k, w) in law.inverse_survivals().take(5000).enumerate() {
            let exact = 1.0 / law.survival(k);
            assert!((w - exact).abs() <= 1e-13 * exact, "k = {k}");
        }
    }

    #[test]
    fn survival_strictly_decreasing() {
        let law = TruncationLaw::new(0.3).unwrap();
        for k in 0..100 {
            assert!(law.survival(k + 1) < law.survival(k));
        }
    }

    #[test]
    fn rejects_bad_p() {
        for p in [0.0, 1.0, -0.1, 1.5, f64::NAN] {
            assert!(TruncationLaw::new(p).is_err(), "p = {p}");
        }
    }

    #[test]
    fn with_mean_inverts() {
        let law = TruncationLaw::with_mean(10.0_f64).unwrap();
        assert!((law.p() - 1.0 / 11.0).abs() < 1e-15);
        assert!((law.mean() - 10.0).abs() < 1e-12);
    }

    fn mean_check(p: f64, expect: f64) {
        let law = TruncationLaw::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let n = 100_000;
        let draws: Vec<f64> = (0..n).map(|_| law.sample(&mut rng).unwrap() as f64).collect();
        let mean = draws.iter().sum::<f64>() / n as f64;
        let se = (law.variance() / n as f64).sqrt();
        assert!((mean - expect).abs() < 4.0 * se, "p={p}: mean {mean}, expected {expect} +- {se}");
    }

    #[test]
    fn sample_mean_matches_half() {
        mean_check(0.5, 1.0);
    }

    #[test]
    fn sample_mean_matches_one_eleventh() {
        mean_check(1.0 / 11.0, 10.0);
    }

    #[test]
    fn near_degenerate_law_draws_zero() {
        let law = TruncationLaw::new(1.0 - 1e-12).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        assert!((0..1000).all(|_| law.sample(&mut rng).unwrap() == 0));
    }

    #[test]
    fn r_max_is_an_error_not_a_clip() {
        let law = TruncationLaw::new(1e-3).unwrap().with_r_max(5);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let err = (0..100).find_map(|_| law.sample(&mut rng).err()).expect("some draw exceeds 5");
        assert!(matches!(err, Error::ResourceExceeded(_)));
    }

    #[test]
    fn positive_law() {
        let law = TruncationLaw::new(0.25).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        assert!((0..1000).all(|_| law.sample_positive(&mut rng).unwrap() >= 1));
        assert_eq!(law.survival_given_positive(1), 1.0);
        assert_eq!(law.survival_given_positive(3), 0.75 * 0.75);
    }
}
