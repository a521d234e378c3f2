use debias_bench::toy_lvm::ToyLvmSpec;
use debias_core::rng::purpose_rng;

fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

#[test]
fn closed_form_moments_match_monte_carlo() {
    let cases = [
        ToyLvmSpec::at_mean(1, 0.5).unwrap(),
        ToyLvmSpec::new(2, 0.0, vec![0.7, -0.4]).unwrap(),
        ToyLvmSpec::new(5, 1.0, vec![1.2, 0.1, 1.9, 0.8, 1.4]).unwrap(),
    ];
    for (i, spec) in cases.iter().enumerate() {
        let mo = spec.moments();
        let mut rng = purpose_rng(i as u64, "toy-moments");
        let xs: Vec<f64> = (0..1_000_000).map(|_| spec.sample_x(&mut rng)).collect();
        let (m, m_se) = mean_se(&xs);
        assert!((m - mo.m).abs() < 4.0 * m_se, "d = {}: mean {m} vs {} (se {m_se})", spec.d, mo.m);
        let sq: Vec<f64> = xs.iter().map(|x| (x - mo.m).powi(2)).collect();
        let (v, v_se) = mean_se(&sq);
        assert!((v - mo.var).abs() < 4.0 * v_se, "d = {}: var {v} vs {} (se {v_se})", spec.d, mo.var);
    }
}

#[test]
fn score_pairs_have_the_gradient_as_mean() {
    let spec = ToyLvmSpec::new(2, 0.3, vec![1.0, -0.2]).unwrap();
    let want = spec.moments().m * spec.grad_log_m();
    let mut rng = purpose_rng(5, "toy-grad");
    let gs: Vec<f64> = (0..1_000_000).map(|_| spec.sample_pair(&mut rng).1).collect();
    let (g, se) = mean_se(&gs);
    assert!((g - want).abs() < 4.0 * se, "{g} vs {want} (se {se})");
}

#[test]
fn log_marginal_has_the_right_theta_derivative() {
    let spec = ToyLvmSpec::new(3, 0.4, vec![1.0, 0.2, -0.5]).unwrap();
    let h = 1e-5;
    let fd = (spec.with_theta(0.4 + h).log_m() - spec.with_theta(0.4 - h).log_m()) / (2.0 * h);
    assert!((fd - spec.grad_log_m()).abs() < 1e-8);
}

#[test]
fn beta2_grows_with_dimension() {
    let mut prev = 0.0;
    for d in 1..=20 {
        let spec = ToyLvmSpec::at_mean(d, 1.0).unwrap();
        let mo = spec.moments();
        let direct = mo.var / (mo.x0_star * mo.x0_star) + (mo.m / mo.x0_star - 1.0).powi(2);
        assert!((direct - mo.beta2_at_x0star).abs() < 1e-9, "d = {d}");
        assert!(mo.beta2_at_x0star > prev);
        prev = mo.beta2_at_x0star;
    }
}
