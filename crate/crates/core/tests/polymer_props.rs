use polylab::env::LatticeEnvironment;
use polylab::polymer::{partition_exact, partition_mc, Restriction, Shifted};
use proptest::prelude::*;

fn field(vals: &[f64]) -> LatticeEnvironment {
    let mut table = Vec::new();
    let mut k = 0;
    for x in -2..=2i64 {
        for y in -2..=2i64 {
            table.push((vec![x, y], vals[k]));
            k += 1;
        }
    }
    LatticeEnvironment::from_table(2, 4.0, table, 1.0).unwrap()
}

fn vals() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(0.0f64..5.0, 25)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn shift_invariance_exact_and_mc(v in vals(), c in 0.0f64..3.0, beta in 0.05f64..1.0, h in 0.0f64..2.0) {
        let env = field(&v);
        let sh = Shifted { inner: &env, shift: c };
        let a = partition_exact(&env, 5, beta, h, 2).unwrap().log_z;
        let b = partition_exact(&sh, 5, beta, h + c, 2).unwrap().log_z;
        prop_assert!((a - b).abs() < 1e-11);
        let a = partition_mc(&env, 10, beta, h, 2, 1000, 9, Restriction::None).unwrap().log_z;
        let b = partition_mc(&sh, 10, beta, h + c, 2, 1000, 9, Restriction::None).unwrap().log_z;
        prop_assert!((a - b).abs() < 1e-11);
    }

    #[test]
    fn monotone_in_each_site(v in vals(), site in 0usize..25, bump in 0.0f64..4.0, beta in 0.05f64..1.5) {
        let env = field(&v);
        let mut w = v.clone();
        w[site] += bump;
        let up = field(&w);
        let a = partition_exact(&env, 4, beta, 0.5, 2).unwrap().log_z;
        let b = partition_exact(&up, 4, beta, 0.5, 2).unwrap().log_z;
        prop_assert!(b >= a - 1e-12);
        let a = partition_mc(&env, 12, beta, 0.5, 2, 1000, 4, Restriction::None).unwrap().log_z;
        let b = partition_mc(&up, 12, beta, 0.5, 2, 1000, 4, Restriction::None).unwrap().log_z;
        prop_assert!(b >= a - 1e-12);
    }

    #[test]
    fn log_z_convex_in_beta(v in vals(), h in 0.0f64..3.0) {
        let env = field(&v);
        let grid: Vec<f64> = (0..9).map(|k| 0.1 + 0.15 * k as f64).collect();
        let lz: Vec<f64> = grid.iter().map(|&b| partition_exact(&env, 5, b, h, 2).unwrap().log_z).collect();
        for k in 1..lz.len() - 1 {
            prop_assert!(lz[k + 1] - 2.0 * lz[k] + lz[k - 1] >= -1e-12);
        }
    }
}
