use debias_core::rng::replicate_rng;
use debias_core::tuning::{
    beta_squared, bootstrap_x0, choose_p, pilot_moments, wnv_bound, wnv_minimize, x0_star, BoundKind, WnvParams,
};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let d = Normal::new(1.0, 1.0).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| d.sample(&mut rng)).collect()
}

proptest! {
    #[test]
    fn x0_star_minimises_beta(m in 0.01f64..10.0, var in 0.0f64..10.0) {
        let xs = x0_star(m, var).unwrap();
        let best = beta_squared(m, var, xs).unwrap();
        prop_assert!((best - var / (m * m + var)).abs() <= 1e-12);
        prop_assert!(best < 1.0);
        for i in 0..1000 {
            let x = xs * (0.5 + i as f64 / 1000.0);
            prop_assert!(best <= beta_squared(m, var, x).unwrap() + 1e-15);
        }
    }

    #[test]
    fn p_rule_is_admissible(beta2 in 0.0f64..0.999_999, n0 in 1usize..100_000) {
        let p = choose_p(beta2, n0).unwrap();
        prop_assert!(p > 0.0 && p <= 1.0 - beta2);
    }

    #[test]
    fn pilot_summary_is_consistent(seed in any::<u64>(), n in 5usize..60) {
        let xs = gaussian(n, seed).iter().map(|x| x.abs() + 0.1).collect::<Vec<_>>();
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 1);
        let s = bootstrap_x0(&xs, 0.01, 300, &mut rng).unwrap();
        prop_assert_eq!(s.x0_min_hat, s.x0_star_hat / 2.0);
        prop_assert_eq!(s.x0_chosen, s.x0_star_hat.max(s.bootstrap_bound));
        prop_assert_eq!(s.beta2_hat, beta_squared(s.m_hat, s.var_hat, s.x0_chosen).unwrap());
        prop_assert_eq!(s.p_chosen, choose_p(s.beta2_hat, n).unwrap());
        prop_assert!(s.p_chosen > 0.0 && s.p_chosen < 1.0);
    }
}

#[test]
fn pilot_moments_concentrate() {
    let (m, v) = pilot_moments(&gaussian(10_000, 3)).unwrap();
    assert!((m - 1.0).abs() < 0.04);
    assert!((v - 1.0).abs() < 0.06);
}

#[test]
fn bootstrap_guard_calibration() {
    let truth = 0.75;
    let runs = 500;
    let mut below = 0;
    for i in 0..runs {
        let (seed, mut rng) = replicate_rng(2024, i);
        let xs = gaussian(100, seed);
        let s = bootstrap_x0(&xs, 0.01, 2000, &mut rng).unwrap();
        if s.x0_chosen < truth {
            below += 1;
        }
    }
    assert!(below as f64 / runs as f64 <= 0.05, "{below} of {runs}");
}

#[test]
fn bootstrap_choice_stays_near_x0_star() {
    let mut inside = 0;
    for i in 0..200 {
        let (seed, mut rng) = replicate_rng(77, i);
        let s = bootstrap_x0(&gaussian(1000, seed), 0.01, 2000, &mut rng).unwrap();
        if s.x0_chosen >= s.x0_star_hat && s.x0_chosen <= 1.25 * s.x0_star_hat {
            inside += 1;
        }
    }
    assert!(inside >= 190, "{inside} of 200");
}

fn grid_argmin(w: &WnvParams<f64>, n: usize) -> f64 {
    let hi = w.p_max();
    (1..n)
        .map(|i| hi * i as f64 / n as f64)
        .map(|p| (p, wnv_bound(w, p).unwrap()))
        .min_by(|a, b| a.1.partial_cmp(&b.1).unwrap())
        .unwrap()
        .0
}

#[test]
fn wnv_minimiser_matches_grid() {
    for kind in [BoundKind::Simple, BoundKind::Cycling] {
        for (b02, b2) in [(0.25, 0.5), (0.01, 0.1), (0.3, 0.8)] {
            let w = WnvParams::new(kind, 10, f64::sqrt(b02), f64::sqrt(b2), 1.0).unwrap();
            let p = wnv_minimize(&w).unwrap();
            let g = grid_argmin(&w, 10_000);
            assert!((p - g).abs() < 1e-3, "{kind:?} ({b02}, {b2}): {p} vs {g}");
        }
    }
}

#[test]
fn wnv_minimiser_moves_down_with_pilot_size() {
    let mut prev = f64::INFINITY;
    for n0 in [1, 10, 100] {
        let w = WnvParams::new(BoundKind::Cycling, n0, 0.01, 0.02, 1.0).unwrap();
        let p = wnv_minimize(&w).unwrap();
        assert!(p > 0.0 && p < 1.0);
        assert!(p < prev, "n0 = {n0}: {p} !< {prev}");
        prev = p;
    }
}

#[test]
fn cycling_bound_below_simple_for_long_series() {
    for n0 in [1, 10, 100] {
        let p = 1.0 / (10.0 * n0 as f64 + 1.0);
        for b02 in [0.01, 0.05, 0.1] {
            for b2 in [0.2, 0.4, 0.6] {
                if p >= 1.0 - b2 {
                    continue;
                }
                let mk = |k| WnvParams::new(k, n0, f64::sqrt(b02), f64::sqrt(b2), 1.0).unwrap();
                let c = wnv_bound(&mk(BoundKind::Cycling), p).unwrap();
                let s = wnv_bound(&mk(BoundKind::Simple), p).unwrap();
                assert!(c < s, "n0={n0} b02={b02} b2={b2}: {c} !< {s}");
            }
        }
    }
}
