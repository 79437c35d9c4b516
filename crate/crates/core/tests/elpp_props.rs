use polylab::elpp::{elpp_exact, CloudKind, PointCloud};
use polylab::entropy::ent;
use proptest::prelude::*;

fn cloud() -> impl Strategy<Value = (usize, Vec<Vec<f64>>)> {
    (2usize..=3).prop_flat_map(|d| (Just(d), prop::collection::vec(prop::collection::vec(-4.0f64..4.0, d), 1..=8)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn monotone_in_budget((d, pts) in cloud(), b1 in 0.0f64..200.0, b2 in 0.0f64..200.0) {
        let c = PointCloud::new(pts, 8.0, CloudKind::Continuum).unwrap();
        let (lo, hi) = if b1 <= b2 { (b1, b2) } else { (b2, b1) };
        prop_assert!(elpp_exact(&c, lo, d).unwrap().k_max <= elpp_exact(&c, hi, d).unwrap().k_max);
    }

    #[test]
    fn witness_within_budget((d, pts) in cloud(), b in 0.0f64..200.0) {
        let c = PointCloud::new(pts, 8.0, CloudKind::Continuum).unwrap();
        let r = elpp_exact(&c, b, d).unwrap();
        prop_assert!(ent(&r.witness, d) <= b + 1e-12 * b.max(1.0));
        prop_assert_eq!(r.witness.len(), r.k_max);
    }
}
