use polylab::env::{order_statistics_discrete, sample_pareto, sample_poisson_field, truncate_environment, LatticeEnvironment};
use polylab::rng::derive_seed;
use polylab::special::unit_ball_volume;
use polylab::stats::ks_one_sample;
use proptest::prelude::*;

#[test]
fn pareto_survival_matches_power_law() {
    let alpha = 1.5;
    let n = 1_000_000;
    let xs = sample_pareto(alpha, n, 21).unwrap();
    assert!(xs.iter().all(|&x| x >= 1.0));
    for t in [2.0f64, 5.0, 10.0] {
        let p = t.powf(-alpha);
        let emp = xs.iter().filter(|&&x| x > t).count() as f64 / n as f64;
        let se = (p * (1.0 - p) / n as f64).sqrt();
        assert!((emp - p).abs() < 4.0 * se, "t = {t}: {emp} vs {p}");
    }
}

#[test]
fn poisson_top_weight_law() {
    let (q, alpha, d) = (3.0, 1.5, 2);
    let m1: Vec<f64> = (0..100_000u64)
        .map(|i| sample_poisson_field(q, alpha, 1, d, derive_seed(77, i)).unwrap().weights[0])
        .collect();
    let vol = unit_ball_volume(d) * q.powi(d as i32);
    let ks = ks_one_sample(&m1, |w| (-vol * w.powf(-alpha)).exp());
    assert!(ks < 0.01, "KS = {ks}");
}

#[test]
fn truncated_field_has_nonpositive_mean() {
    // level 1/β ≥ μ: the truncated, centered weight has non-positive mean
    let alpha = 1.8;
    let mu = alpha / (alpha - 1.0);
    let env = LatticeEnvironment::pareto(2, 150.0, alpha, 5).unwrap();
    let tr = truncate_environment(&env, 1e4, 0.9, mu).unwrap();
    assert!(tr.level >= mu);
    let mut sum = 0.0;
    let mut sq = 0.0;
    let mut n = 0.0;
    for x in -150..=150i64 {
        for y in -150..=150i64 {
            let v = tr.value(&[x, y]);
            sum += v;
            sq += v * v;
            n += 1.0;
        }
    }
    let mean = sum / n;
    let se = ((sq / n - mean * mean) / n).sqrt();
    assert!(mean <= 3.0 * se, "mean {mean} se {se}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn order_statistics_is_permutation(seed in any::<u64>(), r in 1.0f64..6.0, alpha in 0.5f64..1.9) {
        let env = LatticeEnvironment::pareto(2, r, alpha, seed).unwrap();
        let mut raw: Vec<f64> = env.materialize().unwrap().into_iter().map(|p| p.1).collect();
        let stats = order_statistics_discrete(&env).unwrap();
        prop_assert!(stats.weights.windows(2).all(|w| w[0] >= w[1]));
        raw.sort_by(|a, b| b.total_cmp(a));
        prop_assert_eq!(raw, stats.weights);
    }
}
