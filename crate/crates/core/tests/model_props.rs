use polylab::model::{classify_regime, wandering_exponent, ModelParams, Region};
use proptest::prelude::*;

fn params(d: usize, alpha: f64, gamma: f64) -> ModelParams {
    ModelParams { d, alpha, gamma, beta_hat: 1.0, h: 0.0 }
}

proptest! {
    #[test]
    fn region_b_strictly_intermediate(d in 2usize..=5, a in 0.01f64..0.99, g in 0.0f64..1.5) {
        let p = params(d, a * d as f64, g);
        if classify_regime(&p).unwrap() == Region::B {
            let xi = wandering_exponent(&p).unwrap();
            prop_assert!(xi > 0.5 && xi < 1.0);
        }
    }

    #[test]
    fn xi_non_increasing_in_gamma(d in 2usize..=5, a in 0.01f64..0.99, g1 in 0.0f64..1.5, g2 in 0.0f64..1.5) {
        let alpha = a * d as f64;
        let (lo, hi) = if g1 <= g2 { (g1, g2) } else { (g2, g1) };
        let x1 = wandering_exponent(&params(d, alpha, lo)).unwrap();
        let x2 = wandering_exponent(&params(d, alpha, hi)).unwrap();
        prop_assert!(x2 <= x1 + 1e-15);
    }

    #[test]
    fn no_region_b_below_half_d(d in 2usize..=5, a in 0.01f64..0.5, g in 0.0f64..2.0) {
        let p = params(d, a * d as f64, g);
        prop_assert_ne!(classify_regime(&p).unwrap(), Region::B);
    }
}
