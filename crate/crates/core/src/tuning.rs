//! Pilot-run tuning of the expansion point and truncation law, plus the
//! work-normalised variance bounds used to pick `p` by optimisation.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result, Scalar};

pub const DEFAULT_ALPHA: f64 = 0.01;
pub const DEFAULT_N_BOOT: usize = 2000;

/// Everything the tuning pipeline learned from a pilot run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PilotSummary<T> {
    pub n0: usize,
    pub m_hat: T,
    pub var_hat: T,
    pub x0_star_hat: T,
    pub x0_min_hat: T,
    pub bootstrap_bound: T,
    pub x0_chosen: T,
    pub beta2_hat: T,
    pub p_chosen: T,
    pub alpha: T,
    pub n_boot: usize,
}

/// Sample mean and unbiased sample variance.
pub fn pilot_moments<T: Scalar>(xs: &[T]) -> Result<(T, T)> {
    if xs.len() < 2 {
        return Err(Error::domain(format!("pilot run needs n0 >= 2 samples, got {}", xs.len())));
    }
    Ok(mean_var(xs.iter().copied(), xs.len()))
}

fn mean_var<T: Scalar>(xs: impl Iterator<Item = T> + Clone, n: usize) -> (T, T) {
    let nt = T::from_usize_lossy(n);
    let mean = xs.clone().fold(T::zero(), |a, x| a + x) / nt;
    let ss = xs.fold(T::zero(), |a, x| {
        let d = x - mean;
        a + d * d
    });
    (mean, ss / T::from_usize_lossy(n - 1))
}

/// `(m^2 + var) / m`, the minimiser of `beta_squared` over `x0`.
pub fn x0_star<T: Scalar>(m: T, var: T) -> Result<T> {
    if !(m > T::zero()) {
        return Err(Error::domain(format!("x0_star needs m > 0, got {m}")));
    }
    Ok((m * m + var) / m)
}

/// `var / x0^2 + (m / x0 - 1)^2`.
pub fn beta_squared<T: Scalar>(m: T, var: T, x0: T) -> Result<T> {
    if x0 == T::zero() {
        return Err(Error::domain("beta_squared needs x0 != 0"));
    }
    let mt = m / x0 - T::one();
    Ok(var / (x0 * x0) + mt * mt)
}

/// `min(1 - beta2_hat, 1 / (n0 + 1))`.
pub fn choose_p<T: Scalar>(beta2_hat: T, n0: usize) -> Result<T> {
    if !(beta2_hat < T::one()) || beta2_hat < T::zero() {
        return Err(Error::domain(format!("choose_p needs beta2 in [0, 1), got {beta2_hat}")));
    }
    if n0 == 0 {
        return Err(Error::domain("choose_p needs n0 >= 1"));
    }
    let budget = T::one() / T::from_usize_lossy(n0 + 1);
    Ok((T::one() - beta2_hat).min(budget))
}

/// Lower one-sided percentile bootstrap for `x0_min = (m^2 + var) / (2m)`,
/// then the p rule. Returns the full summary.
pub fn bootstrap_x0<T, R>(xs: &[T], alpha: T, n_boot: usize, rng: &mut R) -> Result<PilotSummary<T>>
where
    T: Scalar,
    R: Rng + ?Sized,
{
    let (m_hat, var_hat) = pilot_moments(xs)?;
    if xs.iter().any(|x| !x.is_finite()) {
        return Err(Error::domain("pilot sample contains non-finite values"));
    }
    if !(alpha > T::zero() && alpha < T::one()) {
        return Err(Error::domain(format!("alpha must lie in (0, 1), got {alpha}")));
    }
    if n_boot == 0 {
        return Err(Error::domain("n_boot must be positive"));
    }
    if !(m_hat > T::zero()) {
        return Err(Error::domain(format!("pilot mean {m_hat} is not positive")));
    }
    let n = xs.len();
    let two = T::lit(2.0);
    let mut idx = vec![0usize; n];
    let mut mins = Vec::with_capacity(n_boot);
    for b in 0..n_boot {
        for i in idx.iter_mut() {
            *i = rng.random_range(0..n);
        }
        let (m, v) = mean_var(idx.iter().map(|&i| xs[i]), n);
        if !(m > T::zero()) {
            return Err(Error::domain(format!("bootstrap resample {b} has non-positive mean {m}")));
        }
        mins.push((m * m + v) / (two * m));
    }
    let rank =
        ((T::one() - alpha) * T::from_usize_lossy(n_boot)).ceil().to_f64_lossy().clamp(1.0, n_boot as f64) as usize;
    let (_, bound, _) = mins.select_nth_unstable_by(rank - 1, |a, b| a.partial_cmp(b).expect("finite"));
    let bootstrap_bound = *bound;

    let x0_star_hat = x0_star(m_hat, var_hat)?;
    let x0_chosen = x0_star_hat.max(bootstrap_bound);
    let beta2_hat = beta_squared(m_hat, var_hat, x0_chosen)?;
    let p_chosen = choose_p(beta2_hat, n)?;
    Ok(PilotSummary {
        n0: n,
        m_hat,
        var_hat,
        x0_star_hat,
        x0_min_hat: x0_star_hat / two,
        bootstrap_bound,
        x0_chosen,
        beta2_hat,
        p_chosen,
        alpha,
        n_boot,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BoundKind {
    Simple,
    Cycling,
}

/// Inputs to the work-normalised variance bound.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WnvParams<T> {
    pub estimator_kind: BoundKind,
    pub n0: usize,
    pub beta0: T,
    pub beta: T,
    pub c: T,
}

impl<T: Scalar> WnvParams<T> {
    pub fn new(estimator_kind: BoundKind, n0: usize, beta0: T, beta: T, c: T) -> Result<Self> {
        if !(beta0 >= T::zero() && beta0 <= beta && beta < T::one()) {
            return Err(Error::domain(format!("need 0 <= beta0 <= beta < 1, got beta0 = {beta0}, beta = {beta}")));
        }
        if !(c > T::zero()) {
            return Err(Error::domain(format!("c must be positive, got {c}")));
        }
        Ok(Self { estimator_kind, n0, beta0, beta, c })
    }

    /// Upper end of the admissible interval for `p`.
    pub fn p_max(&self) -> T {
        T::one() - self.beta * self.beta
    }
}

/// `(n0 + E[R]) * var` upper bound for the simple or cycling estimator.
pub fn wnv_bound<T: Scalar>(params: &WnvParams<T>, p: T) -> Result<T> {
    let WnvParams { estimator_kind, n0, beta0, beta, c } = *params;
    let one = T::one();
    let b2 = beta * beta;
    let b02 = beta0 * beta0;
    if !(p > T::zero() && p < one - b2) {
        return Err(Error::domain(format!("p = {p} outside (0, {})", one - b2)));
    }
    let cost = T::from_usize_lossy(n0) + (one - p) / p;
    let bias_term = b02 / ((one - beta0) * (one - beta0)) * p / (one - p - b02);
    let var_term = match estimator_kind {
        BoundKind::Simple => (one + beta) / (one - beta) * (one - p) / (one - p - b2),
        BoundKind::Cycling => {
            let d = one - p - b2;
            T::lit(4.0) * p * (one / p).ln() / (d * d) * (b2 + T::lit(2.0) * beta0 / (one - b02))
        }
    };
    Ok(c * c * cost * (bias_term + var_term))
}

pub const WNV_EDGE: f64 = 1e-9;
pub const WNV_TOL: f64 = 1e-6;

/// Golden-section minimisation of [`wnv_bound`] over `[eps, 1 - beta^2 - eps]`.
pub fn wnv_minimize<T: Scalar>(params: &WnvParams<T>) -> Result<T> {
    let eps = T::lit(WNV_EDGE);
    let tol = T::lit(WNV_TOL);
    let mut a = eps;
    let mut b = params.p_max() - eps;
    if !(b > a) {
        return Err(Error::domain("admissible interval for p is empty"));
    }
    let inv_phi = T::lit((5f64.sqrt() - 1.0) / 2.0);
    let mut x1 = b - inv_phi * (b - a);
    let mut x2 = a + inv_phi * (b - a);
    let mut f1 = wnv_bound(params, x1)?;
    let mut f2 = wnv_bound(params, x2)?;
    for _ in 0..200 {
        if b - a <= tol {
            break;
        }
        if f1 < f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - inv_phi * (b - a);
            f1 = wnv_bound(params, x1)?;
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + inv_phi * (b - a);
            f2 = wnv_bound(params, x2)?;
        }
    }
    Ok((a + b) / T::lit(2.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn moments_examples() {
        assert_eq!(pilot_moments(&[1.0, 1.0, 1.0, 1.0]).unwrap(), (1.0, 0.0));
        assert_eq!(pilot_moments(&[0.0, 2.0]).unwrap(), (1.0, 2.0));
        assert!(pilot_moments(&[1.0]).is_err());
    }

    #[test]
    fn x0_star_and_beta() {
        assert_eq!(x0_star(1.0, 1.0).unwrap(), 2.0);
        assert_eq!(x0_star(2.0, 0.0).unwrap(), 2.0);
        assert!(x0_star(0.0, 1.0).is_err());
        assert_eq!(beta_squared(1.0, 1.0, 2.0).unwrap(), 0.5);
        assert_eq!(beta_squared(3.0, 0.0, 3.0).unwrap(), 0.0);
        assert!(beta_squared(1.0, 1.0, 0.0).is_err());

        let pi = std::f64::consts::PI;
        let (m, v) = (1.0 / (4.0 * pi), 1.0 / (48.0 * pi * pi));
        let xs = x0_star(m, v).unwrap();
        assert!((xs - 1.0 / (3.0 * pi)).abs() < 1e-15);
        assert!((beta_squared(m, v, xs).unwrap() - 0.25).abs() < 1e-14);
    }

    #[test]
    fn choose_p_examples() {
        assert_eq!(choose_p(0.5, 10).unwrap(), 1.0 / 11.0);
        assert!((choose_p(0.95_f64, 10).unwrap() - 0.05).abs() < 1e-15);
        assert_eq!(choose_p(0.0, 10).unwrap(), 1.0 / 11.0);
        assert!(choose_p(1.0, 10).is_err());
    }

    #[test]
    fn bootstrap_degenerate() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let s = bootstrap_x0(&[3.0; 10], 0.01, 2000, &mut rng).unwrap();
        assert_eq!(s.bootstrap_bound, 1.5);
        assert_eq!(s.x0_star_hat, 3.0);
        assert_eq!(s.x0_chosen, 3.0);
        assert_eq!(s.x0_min_hat, 1.5);
        assert_eq!(s.p_chosen, 1.0 / 11.0);
    }

    #[test]
    fn bootstrap_negative_resample() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let err = bootstrap_x0(&[1.0, -3.0, 1.0, 1.0], 0.01, 2000, &mut rng).unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn wnv_blows_up_at_edges() {
        for kind in [BoundKind::Simple, BoundKind::Cycling] {
            let w = WnvParams::new(kind, 10, 0.5, 0.5f64.sqrt(), 1.0).unwrap();
            let p = wnv_minimize(&w).unwrap();
            let inner = wnv_bound(&w, p).unwrap();
            assert!(inner < wnv_bound(&w, 1e-9).unwrap());
            assert!(inner < wnv_bound(&w, w.p_max() - 1e-9).unwrap());
            assert!(wnv_bound(&w, w.p_max()).is_err());
            assert!(wnv_bound(&w, 0.0).is_err());
        }
    }

    #[test]
    fn wnv_cycling_example() {
        let w = WnvParams::new(BoundKind::Cycling, 10, 0.5, 0.5f64.sqrt(), 1.0).unwrap();
        assert!(wnv_bound(&w, 1.0 / 11.0).unwrap() < wnv_bound(&w, 1e-4).unwrap());
    }

    #[test]
    fn wnv_params_validation() {
        assert!(WnvParams::new(BoundKind::Simple, 1, 0.6, 0.5, 1.0).is_err());
        assert!(WnvParams::new(BoundKind::Simple, 1, 0.1, 1.0, 1.0).is_err());
        assert!(WnvParams::new(BoundKind::Simple, 1, 0.1, 0.5, 0.0).is_err());
    }
}
