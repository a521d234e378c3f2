use debias_bench::mlmc::{iwae_estimate, mlmc_log_likelihood, MlmcSpec};
use debias_bench::parallel::map_indexed;
use debias_bench::toy_lvm::ToyLvmSpec;
use debias_core::rng::{purpose_seed, replicate_rng};
use statrs::distribution::{ChiSquared, ContinuousCDF};

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn spec() -> ToyLvmSpec {
    ToyLvmSpec::new(2, 0.0, vec![0.8, -0.3]).unwrap()
}

#[test]
fn iwae_is_consistent_at_large_level() {
    let s = spec();
    let (_, mut rng) = replicate_rng(11, 0);
    let v = iwae_estimate(&s, 0.25, 14, &mut rng);
    assert!((v - s.log_m()).abs() < 0.01, "{v} vs {}", s.log_m());
}

#[test]
fn iwae_is_biased_downwards() {
    let s = spec();
    let stream = purpose_seed(3, "iwae");
    let vals = map_indexed(20_000, |i| iwae_estimate(&s, 0.25, 1, &mut replicate_rng(stream, i).1));
    let (mean, se) = mean_se(&vals);
    assert!(mean < s.log_m() + 4.0 * se);
    assert!(mean < s.log_m(), "{mean} vs {}", s.log_m());
}

#[test]
fn mlmc_is_unbiased_and_follows_its_cost_law() {
    let s = spec();
    let p = 0.6;
    let mlmc = MlmcSpec::new(0, p, 0.25).unwrap();
    let stream = purpose_seed(17, "mlmc");
    let runs = map_indexed(100_000, |i| mlmc_log_likelihood(&s, &mlmc, &mut replicate_rng(stream, i).1).unwrap());
    let vals: Vec<f64> = runs.iter().map(|e| e.estimate).collect();
    let (mean, se) = mean_se(&vals);
    assert!((mean - s.log_m()).abs() < 4.0 * se, "{mean} vs {} (se {se})", s.log_m());

    for e in &runs {
        assert_eq!(e.cost, 1u64 << (1 + e.level));
    }
    // chi-square on R~ with a pooled tail bin
    let n = runs.len() as f64;
    let bins = 10;
    let mut counts = vec![0f64; bins + 1];
    for e in &runs {
        counts[e.level.min(bins)] += 1.0;
    }
    let mut stat = 0.0;
    for (k, &obs) in counts.iter().enumerate() {
        let prob = if k < bins { p * (1.0 - p).powi(k as i32) } else { (1.0 - p).powi(bins as i32) };
        let exp = n * prob;
        stat += (obs - exp).powi(2) / exp;
    }
    let crit = ChiSquared::new(bins as f64).unwrap().inverse_cdf(1.0 - 1e-3);
    assert!(stat < crit, "chi-square {stat} >= {crit}");
}

#[test]
fn cost_cap_turns_into_an_error() {
    let s = spec();
    let mlmc = MlmcSpec::new(0, 0.6, 0.0).unwrap().with_max_cost(2);
    let mut failures = 0;
    for i in 0..200 {
        if mlmc_log_likelihood(&s, &mlmc, &mut replicate_rng(1, i).1).is_err() {
            failures += 1;
        }
    }
    // P(R~ >= 1) = 0.4
    assert!(failures > 40 && failures < 120, "{failures}");
}
