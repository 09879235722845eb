//! Property tests for the quadrature and field metric.

use proptest::prelude::*;
use std::sync::Arc;
use vortexpatch::*;

fn random_field(grid: &Arc<Grid>, seed: u64) -> ScalarField {
    // Cheap deterministic pseudo-field; proptest drives the seed.
    let mut s = seed.wrapping_mul(0x9E3779B97F4A7C15).wrapping_add(1);
    ScalarField::from_fn(grid.clone(), |_| {
        s ^= s << 13;
        s ^= s >> 7;
        s ^= s << 17;
        (s % 2000) as f64 / 1000.0 - 1.0
    })
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn integrate_is_linear(sa in 0u64..1000, sb in 1000u64..2000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
        let grid = discretize(Domain::UnitDisk, 24).unwrap();
        let f = random_field(&grid, sa);
        let g = random_field(&grid, sb);
        let mut combo = ScalarField::zeros(grid.clone());
        combo.axpy(alpha, &f).unwrap();
        combo.axpy(beta, &g).unwrap();
        let lhs = combo.integrate();
        let rhs = alpha * f.integrate() + beta * g.integrate();
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs().max(rhs.abs())));
    }

    #[test]
    fn l1_is_a_metric(sa in 0u64..500, sb in 500u64..1000, sc in 1000u64..1500) {
        let grid = discretize(Domain::UnitDisk, 24).unwrap();
        let f = random_field(&grid, sa);
        let g = random_field(&grid, sb);
        let h = random_field(&grid, sc);
        let dfg = f.l1_distance(&g).unwrap();
        let dgf = g.l1_distance(&f).unwrap();
        prop_assert_eq!(dfg, dgf);
        prop_assert_eq!(f.l1_distance(&f).unwrap(), 0.0);
        prop_assert!(dfg > 0.0); // distinct random fields
        let dfh = f.l1_distance(&h).unwrap();
        let dhg = h.l1_distance(&g).unwrap();
        prop_assert!(dfg <= dfh + dhg + 1e-12 * (1.0 + dfg));
    }

    #[test]
    fn bilinear_interp_respects_bounds(px in -0.9f64..0.9, py in -0.9f64..0.9, seed in 0u64..100) {
        let grid = discretize(Domain::UnitDisk, 24).unwrap();
        let f = random_field(&grid, seed);
        let (lo, hi) = f.min_max();
        let v = f.interp_bilinear(Point::new(px, py));
        prop_assert!(v >= lo.min(0.0) - 1e-12 && v <= hi.max(0.0) + 1e-12);
    }
}
