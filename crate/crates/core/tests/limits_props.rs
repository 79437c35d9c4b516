use polylab::limits::{chi_estimate, f_ball_integral, sample_cloud, CompensatedIntegralSpec, WSampler};
use polylab::walk::f_profile;
use rand::Rng;
use polylab::rng::Stream;
use polylab::special::unit_ball_volume;
use proptest::prelude::*;
use statrs::function::gamma::ln_gamma;

#[test]
fn cloud_count_is_poisson() {
    let (alpha, d, k, eps) = (0.7, 2, 2.0, 0.3);
    let mean = unit_ball_volume(d) * k * k * f64::powf(eps, -alpha);
    let mut rng = Stream::new(4, "count").rng(0);
    let n = 20_000;
    let counts: Vec<usize> = (0..n).map(|_| sample_cloud(&mut rng, alpha, d, k, eps).unwrap().weights.len()).collect();
    // chi-square over bins of width one around the mean, tails pooled
    let lo = (mean - 3.0 * mean.sqrt()).floor().max(0.0) as usize;
    let hi = (mean + 3.0 * mean.sqrt()).ceil() as usize;
    let pmf = |j: usize| (-mean + j as f64 * mean.ln() - ln_gamma(j as f64 + 1.0)).exp();
    let mut cells = vec![(0.0f64, 0.0f64); hi - lo + 2];
    for j in 0..=hi + 200 {
        let idx = if j < lo { 0 } else if j > hi { cells.len() - 1 } else { j - lo };
        cells[idx].1 += pmf(j) * n as f64;
    }
    for &c in &counts {
        let idx = if c < lo { 0 } else if c > hi { cells.len() - 1 } else { c - lo };
        cells[idx].0 += 1.0;
    }
    let chi2: f64 = cells.iter().filter(|c| c.1 > 0.0).map(|(o, e)| (o - e).powi(2) / e).sum();
    let dof = cells.len() as f64 - 1.0;
    // 4 standard deviations above the chi-square mean
    assert!(chi2 < dof + 4.0 * (2.0 * dof).sqrt(), "chi2 {chi2} dof {dof}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn w_non_decreasing_in_beta(seed in any::<u64>(), b1 in 0.01f64..0.5, b2 in 0.01f64..0.5, alpha in prop::sample::select(vec![1.2, 1.5, 1.8])) {
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        let spec = CompensatedIntegralSpec { k: 3.0, eps: 0.5, alpha, d: 2, beta: lo, tol: 1e-10 };
        let a = WSampler::new(spec).unwrap();
        let b = WSampler::new(CompensatedIntegralSpec { beta: hi, ..spec }).unwrap();
        let mut rng = Stream::new(seed, "mono").rng(0);
        let c = sample_cloud(&mut rng, alpha, 2, 3.0, 0.5).unwrap();
        prop_assert!(b.evaluate(&c).value >= a.evaluate(&c).value - 1e-12);
    }
}

#[test]
fn small_beta_matches_zero_beta_on_coupled_clouds() {
    let (alpha, d) = (1.6, 3);
    let s0 = CompensatedIntegralSpec::with_defaults(alpha, d, 0.0);
    let s1 = CompensatedIntegralSpec { beta: 1e-3, ..s0 };
    let (w0, w1) = (WSampler::new(s0).unwrap(), WSampler::new(s1).unwrap());
    let mut rng = Stream::new(12, "continuity").rng(0);
    let mut diffs: Vec<f64> = (0..300)
        .map(|_| {
            let cloud = sample_cloud(&mut rng, alpha, d, s0.k, s0.eps).unwrap();
            (w1.evaluate(&cloud).value - w0.evaluate(&cloud).value).abs()
        })
        .collect();
    diffs.sort_by(f64::total_cmp);
    let median = diffs[diffs.len() / 2];
    assert!(median < 1e-2, "median |W_beta - W_0| = {median}");
}

#[test]
fn ball_integral_of_f_matches_mc_integration() {
    for (d, k) in [(2usize, 1.5), (3, 2.0)] {
        let exact = f_ball_integral(d, k).unwrap();
        let vol = unit_ball_volume(d) * k.powi(d as i32);
        let mut rng = Stream::new(13, "f-mc").rng(d as u64);
        let n = 100_000;
        let (mut s, mut s2) = (0.0, 0.0);
        for _ in 0..n {
            let x = loop {
                let x: Vec<f64> = (0..d).map(|_| rng.random_range(-k..k)).collect();
                if x.iter().map(|c| c * c).sum::<f64>() <= k * k {
                    break x;
                }
            };
            let v = vol * f_profile(&x, d).unwrap();
            s += v;
            s2 += v * v;
        }
        let mean = s / n as f64;
        let se = ((s2 / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - exact).abs() < 3.0 * se, "d={d}: quadrature {exact}, MC {mean} +- {se}");
    }
}

#[test]
fn green_sum_is_centered() {
    let c = chi_estimate(2.5, 5, 10.0, 10_000, 14).unwrap();
    let n = c.values.len() as f64;
    let mean = c.values.iter().sum::<f64>() / n;
    let sd = (c.values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    assert!(mean.abs() < 3.0 * sd / n.sqrt(), "mean {mean}, stderr {}", sd / n.sqrt());
}
