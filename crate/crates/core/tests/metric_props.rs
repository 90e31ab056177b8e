use insitu::metrics::{lp_distance_empirical, zeta3_lower_bound, zeta3_upper_bound};
use proptest::prelude::*;

fn triple(len: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, Vec<f64>)> {
    let v = || prop::collection::vec(-100.0f64..100.0, len);
    (v(), v(), v())
}

proptest! {
    #[test]
    fn triangle_inequality((a, b, c) in (1usize..40).prop_flat_map(triple), p in 1.0f64..6.0) {
        let ab = lp_distance_empirical(&a, &b, p).unwrap();
        let bc = lp_distance_empirical(&b, &c, p).unwrap();
        let ac = lp_distance_empirical(&a, &c, p).unwrap();
        prop_assert!(ac <= ab + bc + 1e-9 * (1.0 + ab + bc));
    }

    #[test]
    fn symmetric_and_nonnegative((a, b, _) in (1usize..40).prop_flat_map(triple)) {
        let ab = lp_distance_empirical(&a, &b, 3.0).unwrap();
        prop_assert!(ab >= 0.0);
        prop_assert_eq!(ab, lp_distance_empirical(&b, &a, 3.0).unwrap());
    }

    #[test]
    fn nondecreasing_in_p((a, b, _) in (1usize..40).prop_flat_map(triple), p in 1.0f64..5.0, dp in 0.0f64..3.0) {
        let lo = lp_distance_empirical(&a, &b, p).unwrap();
        let hi = lp_distance_empirical(&a, &b, p + dp).unwrap();
        prop_assert!(lo <= hi * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn bounds_scale_with_cube(x in -5.0f64..5.0, y in -5.0f64..5.0, nv in 0.0f64..4.0, nw in 0.0f64..4.0, l in 0.0f64..4.0, c in -3.0f64..3.0) {
        let c3 = c.abs().powi(3);
        let lower = zeta3_lower_bound(c.powi(3) * x, c.powi(3) * y);
        prop_assert!((lower - c3 * zeta3_lower_bound(x, y)).abs() <= 1e-12 * (1.0 + lower));
        let upper = zeta3_upper_bound(c.abs() * nv, c.abs() * nw, c.abs() * l).unwrap();
        let base = zeta3_upper_bound(nv, nw, l).unwrap();
        prop_assert!((upper - c3 * base).abs() <= 1e-12 * (1.0 + upper));
    }
}
