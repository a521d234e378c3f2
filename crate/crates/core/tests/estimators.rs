use debias_core::oracle::{conditional_expectation_given_r, gradient_cycling_cross_moment, GradParams, MomentParams};
use debias_core::rng::replicate_rng;
use debias_core::series::{
    cycling_gradient_coeffs, simple_gradient_coeffs, CoefficientKind, ConstantSource, Expansion, GaussianSource,
    SumEstimator, TruncationLaw,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn reciprocal_estimates_are_unbiased() {
    let exp = Expansion::reciprocal(2.0).unwrap();
    let law = TruncationLaw::new(0.1).unwrap();
    for kind in CoefficientKind::ALL {
        let est = SumEstimator::new(exp.clone(), law, kind);
        let mut src = GaussianSource::new(1.0, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let vals: Vec<f64> = (0..100_000).map(|_| est.estimate(&mut src, &mut rng).unwrap().value).collect();
        let (mean, se) = mean_se(&vals);
        assert!((mean - 1.0).abs() <= 4.0 * se, "{kind:?}: {mean} (se {se})");
    }
}

#[test]
fn zero_variance_expectation_recovers_target() {
    for (exp, m, p) in [
        (Expansion::<f64>::log(2.0).unwrap(), 1.0, 0.1),
        (Expansion::log(1.5).unwrap(), 2.2, 0.3),
        (Expansion::reciprocal(2.0).unwrap(), 1.0, 0.05),
        (Expansion::reciprocal(0.8).unwrap(), 1.1, 0.5),
    ] {
        let law = TruncationLaw::new(p).unwrap();
        let b0: f64 = (m / exp.x0() - 1.0).abs();
        assert!(b0 * b0 / (1.0 - p) < 1.0);
        let mut total = 0.0;
        let mut r = 0;
        while law.survival(r) > 1e-18 {
            let e = conditional_expectation_given_r(&exp, &law, m, r).unwrap();
            // the three kinds agree on constant input
            let mut rng = ChaCha8Rng::seed_from_u64(0);
            for kind in CoefficientKind::ALL {
                let v = SumEstimator::new(exp.clone(), law, kind)
                    .estimate_given_r(r, &mut ConstantSource(m), &mut rng)
                    .unwrap()
                    .value;
                assert!((v - e).abs() <= 1e-12 * (1.0 + e.abs()), "{kind:?} r={r}");
            }
            total += law.mass(r) * e;
            r += 1;
        }
        let target = exp.target(m).unwrap();
        assert!((total - target).abs() < 1e-10, "{total} vs {target}");
    }
}

#[test]
fn samples_used_follows_the_truncation_law() {
    let p = 0.2;
    let n = 100_000;
    let est = SumEstimator::new(Expansion::log(2.0).unwrap(), TruncationLaw::new(p).unwrap(), CoefficientKind::Simple);
    let mut src = GaussianSource::new(1.0, 0.5).unwrap();
    let bins = 25;
    let mut counts = vec![0usize; bins + 1];
    for i in 0..n {
        let (_, mut rng) = replicate_rng(99, i as u64);
        let e = est.estimate(&mut src, &mut rng).unwrap();
        counts[e.samples_used.min(bins)] += 1;
    }
    let law = TruncationLaw::new(p).unwrap();
    let mut chi2 = 0.0;
    for (k, &c) in counts.iter().enumerate() {
        let prob = if k < bins { law.mass(k) } else { law.survival(bins) };
        let expected = prob * n as f64;
        chi2 += (c as f64 - expected).powi(2) / expected;
    }
    let crit = ChiSquared::new(bins as f64).unwrap().inverse_cdf(1.0 - 1e-3);
    assert!(chi2 < crit, "chi2 = {chi2}, critical = {crit}");
}

/// Literal windows: G at the terminal index, preceded by k-1 centred X's.
fn gradient_windows(ys: &[f64], gs: &[f64], cyclic: bool) -> Vec<f64> {
    let r = ys.len();
    let mut w = vec![0.0; r];
    for k in 1..=r {
        let starts = if cyclic { r } else { 1 };
        let mut acc = 0.0;
        for s in 0..starts {
            let mut prod = gs[(s + k - 1) % r];
            for i in 0..k - 1 {
                prod *= ys[(s + i) % r];
            }
            acc += prod;
        }
        w[k - 1] = acc / starts as f64;
    }
    w
}

proptest! {
    #[test]
    fn gradient_coeffs_match_windows(
        x0 in 0.5f64..3.0,
        pairs in prop::collection::vec((-1.2f64..1.2, -3.0f64..3.0), 1..=20),
    ) {
        let xs: Vec<f64> = pairs.iter().map(|(y, _)| (y + 1.0) * x0).collect();
        let gs: Vec<f64> = pairs.iter().map(|(_, g)| *g).collect();
        let ys: Vec<f64> = xs.iter().map(|x| x / x0 - 1.0).collect();
        for (cyclic, got) in [
            (false, simple_gradient_coeffs(&xs, &gs, 1, x0)),
            (true, cycling_gradient_coeffs(&xs, &gs, 1, x0)),
        ] {
            let want = gradient_windows(&ys, &gs, cyclic);
            for k in 0..xs.len() {
                prop_assert!((got[k] - want[k]).abs() <= 1e-12 * (1.0 + want[k].abs()));
            }
        }
    }
}

#[test]
fn gradient_cycling_moments_match_monte_carlo() {
    // X = m + sd Z1, G = a + b Z1 + c Z2
    let (m, sd, x0) = (1.0, 0.8, 1.6);
    let (a, b, c) = (0.7, 0.5, 0.9);
    let params = MomentParams::new(m, sd * sd, x0).unwrap();
    let grad = GradParams { s2: a * a + b * b + c * c, t: a * params.m_tilde() + b * sd / x0, grad_m: a };
    let n = 200_000;
    let mut rng = ChaCha8Rng::seed_from_u64(4242);
    for r in 1..=6usize {
        let mut sums = vec![0.0; r * r];
        let mut sqs = vec![0.0; r * r];
        let mut xs = vec![0.0; r];
        let mut gs = vec![0.0; r];
        for _ in 0..n {
            for i in 0..r {
                let z1: f64 = StandardNormal.sample(&mut rng);
                let z2: f64 = StandardNormal.sample(&mut rng);
                xs[i] = m + sd * z1;
                gs[i] = a + b * z1 + c * z2;
            }
            let w = cycling_gradient_coeffs(&xs, &gs, 1, x0);
            for k in 0..r {
                for l in k..r {
                    let v = w[k] * w[l];
                    sums[k * r + l] += v;
                    sqs[k * r + l] += v * v;
                }
            }
        }
        for k in 1..=r {
            for l in k..=r {
                let idx = (k - 1) * r + (l - 1);
                let mean = sums[idx] / n as f64;
                let se = ((sqs[idx] / n as f64 - mean * mean) / (n - 1) as f64).sqrt();
                let want = gradient_cycling_cross_moment(&params, &grad, r, k, l).unwrap();
                assert!((mean - want).abs() <= 4.0 * se + 1e-12, "r={r} k={k} l={l}: {mean} vs {want} (se {se})");
            }
        }
    }
}
