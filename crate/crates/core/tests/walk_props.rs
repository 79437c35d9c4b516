use polylab::rng::Stream;
use polylab::walk::{escape_probability, green, hitting_probability_inf, overlap_sum, visit_probability_sweep, OverlapMode, Walker};
use proptest::prelude::*;
use rustc_hash::FxHashMap;

#[test]
fn intersection_identity() {
    let (n, d, m) = (48u64, 2, 4000u64);
    let stream = Stream::new(3, "identity");
    let mut counts: FxHashMap<u128, u64> = FxHashMap::default();
    let mut total_range = 0u64;
    for r in 0..m {
        let mut w = Walker::new(d, stream.rng(r));
        let mut seen = vec![w.key()];
        for _ in 0..n {
            w.step();
            seen.push(w.key());
        }
        seen.sort_unstable();
        seen.dedup();
        total_range += seen.len() as u64;
        for k in seen {
            *counts.entry(k).or_default() += 1;
        }
    }
    let mf = m as f64;
    let sum_p2: f64 = counts.values().map(|&c| (c as f64 / mf).powi(2)).sum();
    // Σ P̂² counts the diagonal pairs; remove them to get the pair mean.
    let pairs = (sum_p2 * mf * mf - total_range as f64) / (mf * (mf - 1.0));
    let direct = overlap_sum(n, d, OverlapMode::Mc { replicas: 20_000, seed: 9 }).unwrap();
    assert!((pairs - direct.mean).abs() < 4.0 * direct.stderr * (1.0 + (20_000.0 / mf).sqrt()), "{pairs} vs {direct:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn visit_monotone_in_n(x in -4i64..=4, y in -4i64..=4, seed in any::<u64>()) {
        prop_assume!(x != 0 || y != 0);
        let grid = [10usize, 20, 40, 80, 160];
        let est = visit_probability_sweep(&[vec![x, y]], &grid, 500, seed).unwrap();
        prop_assert!(est.windows(2).all(|w| w[1].estimate.mean >= w[0].estimate.mean));
    }

    #[test]
    fn hitting_below_green_times_escape(x in prop::collection::vec(-6i64..=6, 3)) {
        let h = hitting_probability_inf(&x, 3).unwrap();
        let bound = green(&x, 3).unwrap().value * escape_probability(3).unwrap();
        prop_assert!(h <= bound + 1e-12);
    }
}
