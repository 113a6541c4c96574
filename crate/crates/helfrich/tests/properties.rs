//! Property suite: exact identities and invariances under randomized
//! scales, translations, and parameters.

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

use helfrich::functionals;
use helfrich::shapes;
use helfrich::varifold::{quadrature_varifold, BallProfile, QuadratureOrder};

fn small_sphere() -> helfrich::TriangleImmersion {
    shapes::sphere(1.0, 2)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn scaling_identity_exchanges_mesh_and_c0(
        r in 0.1f64..10.0,
        c0 in -3.0f64..3.0,
    ) {
        let mesh = small_sphere();
        let curv = mesh.mean_curvature().unwrap();
        let scaled = mesh.transform(r, Vector3::zeros()).unwrap();
        let curv_scaled = scaled.mean_curvature().unwrap();
        let lhs = functionals::helfrich_energy(&curv, c0);
        let rhs = functionals::helfrich_energy(&curv_scaled, c0 / r);
        prop_assert!((lhs - rhs).abs() <= 1e-10 * lhs.abs().max(1e-10), "{lhs} vs {rhs}");
    }

    #[test]
    fn willmore_ignores_similarity_transforms(
        s in 0.2f64..5.0,
        tx in -3.0f64..3.0,
        ty in -3.0f64..3.0,
        tz in -3.0f64..3.0,
    ) {
        let mesh = small_sphere();
        let moved = mesh.transform(s, Vector3::new(tx, ty, tz)).unwrap();
        let a = functionals::willmore_energy(&mesh.mean_curvature().unwrap());
        let b = functionals::willmore_energy(&moved.mean_curvature().unwrap());
        prop_assert!((a - b).abs() <= 1e-10 * a.abs());
    }

    #[test]
    fn area_and_volume_are_homogeneous(
        s in 0.2f64..4.0,
        tx in -2.0f64..2.0,
    ) {
        let mesh = small_sphere();
        let moved = mesh.transform(s, Vector3::new(tx, 0.0, 0.0)).unwrap();
        let area_ratio = moved.total_area() / mesh.total_area();
        let vol_ratio = moved.algebraic_volume() / mesh.algebraic_volume();
        prop_assert!((area_ratio - s * s).abs() <= 1e-10 * s * s);
        prop_assert!((vol_ratio - s * s * s).abs() <= 1e-10 * s * s * s);
    }

    #[test]
    fn orientation_reversal_flips_signed_functionals(
        s in 0.5f64..2.0,
    ) {
        let mesh = small_sphere().transform(s, Vector3::zeros()).unwrap();
        let reversed = mesh.reversed();
        prop_assert!(
            (mesh.algebraic_volume() + reversed.algebraic_volume()).abs()
                <= 1e-12 * mesh.algebraic_volume().abs()
        );
        let a = functionals::total_mean_curvature(&mesh.mean_curvature().unwrap());
        let b = functionals::total_mean_curvature(&reversed.mean_curvature().unwrap());
        prop_assert!((a + b).abs() <= 1e-9 * a.abs());
    }

    #[test]
    fn helfrich_quadratic_in_c0_reproduces_any_sample(
        probe in -4.0f64..4.0,
    ) {
        let mesh = small_sphere();
        let curv = mesh.mean_curvature().unwrap();
        let e = |c: f64| functionals::helfrich_energy(&curv, c);
        let (x0, x1, x2) = (-1.0, 0.0, 1.0);
        let (y0, y1, y2) = (e(x0), e(x1), e(x2));
        let fit = y0 * (probe - x1) * (probe - x2) / ((x0 - x1) * (x0 - x2))
            + y1 * (probe - x0) * (probe - x2) / ((x1 - x0) * (x1 - x2))
            + y2 * (probe - x0) * (probe - x1) / ((x2 - x0) * (x2 - x1));
        let direct = e(probe);
        prop_assert!((fit - direct).abs() <= 1e-10 * direct.abs().max(1e-6));
    }

    #[test]
    fn ball_weight_is_monotone(
        px in -2.0f64..2.0,
        py in -2.0f64..2.0,
        pz in -2.0f64..2.0,
        rho_a in 0.05f64..4.0,
        rho_b in 0.05f64..4.0,
    ) {
        let atoms = quadrature_varifold(&small_sphere(), QuadratureOrder::Centroid);
        let profile = BallProfile::new(&atoms, &Point3::new(px, py, pz));
        let (lo, hi) = (rho_a.min(rho_b), rho_a.max(rho_b));
        prop_assert!(profile.weight_within(lo) <= profile.weight_within(hi));
    }

    #[test]
    fn total_weight_survives_reversal_and_rigid_motion(
        tx in -5.0f64..5.0,
        tz in -5.0f64..5.0,
    ) {
        let mesh = small_sphere();
        let moved = mesh.transform(1.0, Vector3::new(tx, 0.0, tz)).unwrap();
        let base = quadrature_varifold(&mesh, QuadratureOrder::EdgeMidpoints);
        let after = quadrature_varifold(&moved, QuadratureOrder::EdgeMidpoints);
        prop_assert!((base.total_weight() - after.total_weight()).abs() <= 1e-10);
        prop_assert!(
            (base.total_weight() - base.reverse_orientation().total_weight()).abs() == 0.0
        );
    }

    #[test]
    fn multiplicity_is_similarity_invariant(
        s in 0.3f64..3.0,
        tx in -2.0f64..2.0,
        eps in 0.05f64..0.3,
    ) {
        let mesh = shapes::dumbbell(0.0, 0.0, 1.0, 0.12).unwrap();
        let x0 = Point3::origin();
        let base = mesh.multiplicity_at(&x0, eps);
        let t = Vector3::new(tx, 0.5, -0.25);
        let moved = mesh.transform(s, t).unwrap();
        let x0_moved = Point3::from(x0.coords * s + t);
        prop_assert_eq!(moved.multiplicity_at(&x0_moved, s * eps), base);
    }
}
