use polylab::env::OrderStatistics;
use polylab::varprob::{discrete_t, EntropyKind};
use proptest::prelude::*;

fn stats() -> impl Strategy<Value = (usize, OrderStatistics)> {
    (2usize..=3).prop_flat_map(|d| {
        (Just(d), prop::collection::btree_map(prop::collection::vec(-6i64..=6, d), 1.0f64..50.0, 1..=8)).prop_map(|(d, m)| {
            let pairs = m.into_iter().filter(|(s, _)| s.iter().any(|&c| c != 0)).map(|(s, w)| (w, s)).collect();
            (d, OrderStatistics::from_lattice(pairs, 10.0))
        })
    })
}

fn value(s: &OrderStatistics, n: f64, beta: f64, ell: usize, d: usize, kind: EntropyKind) -> f64 {
    discrete_t(s, n, beta, ell.min(s.len()), d, kind).unwrap().value
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn nonnegative_and_zero_iff_empty((d, s) in stats(), n in 5.0f64..200.0, beta in 0.0f64..3.0) {
        for kind in [EntropyKind::Quadratic, EntropyKind::Rate] {
            let sol = discrete_t(&s, n, beta, s.len(), d, kind).unwrap();
            prop_assert!(sol.value >= 0.0);
            prop_assert_eq!(sol.value == 0.0, sol.witness.is_empty());
        }
    }

    #[test]
    fn monotone_in_beta_ell_n((d, s) in stats(), n in 5.0f64..200.0, beta in 0.0f64..3.0, db in 0.0f64..2.0, dn in 0.0f64..100.0) {
        let ell = s.len();
        for kind in [EntropyKind::Quadratic, EntropyKind::Rate] {
            let v = value(&s, n, beta, ell, d, kind);
            let tol = 1e-12 * v.max(1.0);
            prop_assert!(value(&s, n, beta + db, ell, d, kind) >= v - tol);
            prop_assert!(value(&s, n + dn, beta, ell, d, kind) >= v - tol);
            if ell > 1 {
                prop_assert!(value(&s, n, beta, ell - 1, d, kind) <= v + tol);
            }
        }
    }

    #[test]
    fn monotone_in_weights((d, s) in stats(), n in 5.0f64..200.0, beta in 0.1f64..3.0, i in 0usize..8, bump in 0.0f64..30.0) {
        let i = i % s.len();
        let mut pairs: Vec<(f64, Vec<i64>)> = s.weights.iter().zip(&s.sites)
            .map(|(&w, x)| (w, x.iter().map(|&c| c as i64).collect())).collect();
        pairs[i].0 += bump;
        let up = OrderStatistics::from_lattice(pairs, s.domain_radius);
        for kind in [EntropyKind::Quadratic, EntropyKind::Rate] {
            let v = value(&s, n, beta, s.len(), d, kind);
            prop_assert!(value(&up, n, beta, s.len(), d, kind) >= v - 1e-12 * v.max(1.0));
        }
    }

    #[test]
    fn hat_below_quadratic_over_d((d, s) in stats(), n in 5.0f64..200.0, beta in 0.0f64..3.0) {
        let hat = value(&s, n, beta, s.len(), d, EntropyKind::Rate);
        let quad = value(&s, n, d as f64 * beta, s.len(), d, EntropyKind::Quadratic);
        prop_assert!(hat <= quad / d as f64 + 1e-10 * quad.max(1.0));
    }
}
