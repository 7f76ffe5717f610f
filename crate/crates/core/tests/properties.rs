//! Property tests for the structural invariants: quadrature weight bounds,
//! the interpolation maximum principle, Mehler semigroup laws, and the
//! Minkowski gauge inequalities on random polytopes.

use proptest::prelude::*;

use oubv::convex::{ConvexBody, Halfspace};
use oubv::grid::{gaussian_integrate, GaussianGrid, ScalarField};
use oubv::mehler::{l2_distance, l2_norm, mehler_apply};

fn grid_params() -> impl Strategy<Value = (usize, f64, f64)> {
    (1usize..=3, 4.0f64..8.0, 1usize..=4).prop_map(|(d, l, k)| {
        // dyadic spacings at desk resolutions, capped so node counts stay
        // under the grid limit in three dimensions
        let k = k.min(if d == 3 { 2 } else { 4 });
        (d, l, 0.5f64.powi(k as i32))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Weight sums live in [1 - tail, 1] and every weight is positive.
    #[test]
    fn weight_sum_bounds((d, l, h) in grid_params()) {
        let grid = GaussianGrid::new(d, l, h).unwrap();
        let sum = grid.weight_sum();
        prop_assert!(sum <= 1.0 + 1e-12, "sum {sum}");
        prop_assert!(sum >= 1.0 - grid.tail_mass() - 1e-12, "sum {sum}, tail {}", grid.tail_mass());
        prop_assert!(grid.weights().iter().all(|w| *w > 0.0));
        let count = grid.nodes_per_axis().pow(d as u32);
        prop_assert_eq!(grid.len(), count);
    }

    /// Multilinear interpolation obeys the maximum principle, which the
    /// Mehler contraction check relies on.
    #[test]
    fn interpolation_maximum_principle(
        coeffs in prop::array::uniform4(-2.0f64..2.0),
        probe in prop::array::uniform3(-10.0f64..10.0),
    ) {
        let grid = GaussianGrid::new(2, 4.0, 0.5).unwrap();
        let f = ScalarField::from_fn(&grid, |p| {
            coeffs[0] + coeffs[1] * p[0] + coeffs[2] * p[1] + coeffs[3] * p[0] * p[1]
        });
        let lo = f.values().iter().cloned().fold(f64::INFINITY, f64::min);
        let hi = f.values().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let v = f.interpolate(&[probe[0], probe[1], 0.0]);
        prop_assert!(v >= lo - 1e-12 && v <= hi + 1e-12, "{v} outside [{lo}, {hi}]");
    }

    /// Semigroup law, L2 contraction, and mass invariance of the Mehler
    /// integral on random quadratic data, within C (h + tail).
    #[test]
    fn mehler_semigroup_properties(
        c in prop::array::uniform3(-1.0f64..1.0),
        s in 0.05f64..1.0,
        t in 0.05f64..1.0,
    ) {
        let grid = GaussianGrid::new(1, 8.0, 1.0 / 32.0).unwrap();
        let tol = 5.0 * (grid.spacing() + grid.tail_mass());
        let f = ScalarField::from_fn(&grid, |p| c[0] + c[1] * p[0] + c[2] * p[0] * p[0]);
        let two = mehler_apply(&mehler_apply(&f, s).unwrap(), t).unwrap();
        let one = mehler_apply(&f, s + t).unwrap();
        prop_assert!(l2_distance(&two, &one).unwrap() < tol);
        prop_assert!(l2_norm(&one) <= l2_norm(&f) + tol);
        let mass_before = gaussian_integrate(&f, None).unwrap();
        let mass_after = gaussian_integrate(&one, None).unwrap();
        prop_assert!((mass_before - mass_after).abs() < tol);
    }

    /// Gauge convexity, positive homogeneity about the center, and the
    /// 1/r Lipschitz bound on random supporting-plane polytopes.
    #[test]
    fn minkowski_gauge_inequalities(
        m in 3usize..9,
        radius in 0.5f64..2.0,
        rotation in 0.0f64..1.0,
        x in prop::array::uniform2(-3.0f64..3.0),
        y in prop::array::uniform2(-3.0f64..3.0),
        lam in 0.0f64..1.0,
        scale in 0.1f64..3.0,
    ) {
        let faces: Vec<Halfspace> = (0..m)
            .map(|k| {
                let th = rotation + 2.0 * std::f64::consts::PI * k as f64 / m as f64;
                Halfspace::new([th.cos(), th.sin(), 0.0], radius)
            })
            .collect();
        let body = ConvexBody::halfspace_intersection(2, faces, [0.0; 3]).unwrap();
        let xp = [x[0], x[1], 0.0];
        let yp = [y[0], y[1], 0.0];
        let mx = body.minkowski(&xp);
        let my = body.minkowski(&yp);
        let z = [
            lam * x[0] + (1.0 - lam) * y[0],
            lam * x[1] + (1.0 - lam) * y[1],
            0.0,
        ];
        prop_assert!(body.minkowski(&z) <= lam * mx + (1.0 - lam) * my + 1e-12);
        let dist = ((x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2)).sqrt();
        prop_assert!((mx - my).abs() <= dist / body.inradius() + 1e-12);
        let xs = [scale * x[0], scale * x[1], 0.0];
        prop_assert!((body.minkowski(&xs) - scale * mx).abs() <= 1e-12 * (1.0 + scale * mx));
        // level set agrees with the half-space membership test
        if (mx - 1.0).abs() > 1e-9 {
            let direct = body
                .halfspaces()
                .unwrap()
                .iter()
                .all(|f| f.normal[0] * x[0] + f.normal[1] * x[1] <= f.offset);
            prop_assert_eq!(body.contains(&xp), direct);
        }
    }
}
