use polylab::entropy::{ent, ent_n, hat_ent_n, path_length, rate_jd, shortest_visit_length, OrderedPointSet};
use proptest::prelude::*;

fn point(d: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(-0.99f64..0.99, d)
}

fn config(d: usize, max: usize) -> impl Strategy<Value = Vec<Vec<f64>>> {
    prop::collection::vec(prop::collection::vec(-5.0f64..5.0, d), 1..=max)
}

proptest! {
    #[test]
    fn jd_quadratic_lower_bound(x in (1usize..=4).prop_flat_map(point)) {
        let n2: f64 = x.iter().map(|c| c * c).sum();
        if x.iter().map(|c| c.abs()).sum::<f64>() < 1.0 {
            prop_assert!(rate_jd(&x) >= 0.5 * n2 - 1e-12);
        }
    }

    #[test]
    fn jd_symmetric(x in (2usize..=4).prop_flat_map(point), flip in any::<u8>(), rot in 0usize..4) {
        prop_assume!(x.iter().map(|c| c.abs()).sum::<f64>() < 1.0);
        let mut y: Vec<f64> = x.iter().enumerate().map(|(i, &c)| if flip >> i & 1 == 1 { -c } else { c }).collect();
        let len = y.len();
        y.rotate_left(rot % len);
        let (a, b) = (rate_jd(&x), rate_jd(&y));
        prop_assert!((a - b).abs() <= 1e-10 * a.max(1.0));
    }

    #[test]
    fn ent_rotation_and_scaling(pts in config(2, 6), theta in 0.0f64..6.3, a in 0.1f64..10.0) {
        let (s, c) = theta.sin_cos();
        let delta = OrderedPointSet::new(pts.clone()).unwrap();
        let rot = OrderedPointSet::new(pts.iter().map(|p| vec![c * p[0] - s * p[1], s * p[0] + c * p[1]]).collect()).unwrap();
        let e = ent(&delta, 2);
        prop_assert!((ent(&rot, 2) - e).abs() <= 1e-10 * e.max(1.0));
        prop_assert!((ent(&delta.scaled(a), 2) - a * a * e).abs() <= 1e-10 * (a * a * e).max(1.0));
    }

    #[test]
    fn ent_n_is_ent_over_n(pts in config(3, 5), n in 1.0f64..1e4) {
        let delta = OrderedPointSet::new(pts).unwrap();
        prop_assert_eq!(ent_n(&delta, 3, n).0, ent(&delta, 3) / n);
    }

    #[test]
    fn hat_ent_non_increasing_in_n(pts in config(2, 4), n in 1.0f64..100.0, extra in 0.0f64..100.0) {
        let delta = OrderedPointSet::new(pts).unwrap();
        let l1: f64 = delta.increments().iter().map(|v| v.iter().map(|c| c.abs()).sum::<f64>()).sum();
        let n = n + l1;
        let a = hat_ent_n(&delta, n).value;
        let b = hat_ent_n(&delta, n + extra).value;
        prop_assert!(b <= a * (1.0 + 1e-9) + 1e-12);
    }

    #[test]
    fn shortest_beats_any_order(pts in config(2, 7), seed in any::<u64>()) {
        let (best, _) = shortest_visit_length(&pts).unwrap();
        let mut order: Vec<usize> = (0..pts.len()).collect();
        let mut s = seed;
        for i in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let delta = OrderedPointSet::new(order.iter().map(|&i| pts[i].clone()).collect()).unwrap();
        prop_assert!(best <= path_length(&delta) + 1e-12);
    }
}
