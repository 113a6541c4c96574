use approx::assert_relative_eq;
use nalgebra::{Matrix3, Point3, Vector3};

use super::*;
use crate::functionals;
use crate::geomcore::tests::unit_tetrahedron;
use crate::shapes;

const PI: f64 = std::f64::consts::PI;

#[test]
fn centroid_quadrature_partitions_area() {
    let tetra = unit_tetrahedron();
    let atoms = quadrature_varifold(&tetra, QuadratureOrder::Centroid);
    assert_eq!(atoms.atoms.len(), 4);
    assert_relative_eq!(atoms.total_weight(), 3.0f64.sqrt(), max_relative = 1e-12);

    let mesh = shapes::sphere(1.0, 4);
    let atoms3 = quadrature_varifold(&mesh, QuadratureOrder::EdgeMidpoints);
    assert_eq!(atoms3.atoms.len(), 3 * 5120);
    assert_relative_eq!(atoms3.total_weight(), mesh.total_area(), max_relative = 1e-12);
}

#[test]
fn centroid_atoms_reproduce_algebraic_volume() {
    let mesh = shapes::torus(0.5, 0.1);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let volume: f64 = atoms
        .atoms
        .iter()
        .map(|a| -a.weight * a.position.coords.dot(&a.normal) / 3.0)
        .sum();
    assert_relative_eq!(volume, mesh.algebraic_volume(), max_relative = 1e-10);
}

#[test]
fn refined_quadrature_partitions_area() {
    let mesh = shapes::sphere(1.0, 3);
    let curv = mesh.mean_curvature().unwrap();
    let x0 = Point3::new(1.0, 0.0, 0.0);
    let (atoms, h) = refined_quadrature_near(&mesh, &curv, &x0, 6);
    assert_eq!(atoms.atoms.len(), h.len());
    assert!(atoms.atoms.len() > 3 * mesh.n_faces());
    assert_relative_eq!(atoms.total_weight(), mesh.total_area(), max_relative = 1e-10);
}

#[test]
fn ball_weights_match_cap_areas() {
    let mesh = shapes::sphere(1.0, 4);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::EdgeMidpoints);
    let x0 = Point3::new(1.0, 0.0, 0.0);
    // Whole surface.
    assert_relative_eq!(weight_in_ball(&atoms, &x0, 3.0), 4.0 * PI, max_relative = 0.005);
    // Small cap through a surface point has area pi rho^2 exactly.
    assert_relative_eq!(weight_in_ball(&atoms, &x0, 0.2), PI * 0.04, max_relative = 0.05);
    // Below every atom distance.
    assert_eq!(weight_in_ball(&atoms, &Point3::new(5.0, 0.0, 0.0), 0.5), 0.0);
}

#[test]
fn ball_weight_is_monotone_in_rho() {
    let mesh = shapes::capped_cylinder(1.0, 0.7, 0.1);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let profile = BallProfile::new(&atoms, &Point3::new(0.7, 0.0, 0.0));
    let mut last = 0.0;
    for k in 1..40 {
        let w = profile.weight_within(0.1 * k as f64);
        assert!(w >= last);
        last = w;
    }
}

#[test]
fn density_profile_sees_sheet_counts() {
    let mesh = shapes::sphere(1.0, 4);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::EdgeMidpoints);
    let on = density_profile(&atoms, &Point3::new(1.0, 0.0, 0.0), &[0.4, 0.3, 0.2]).unwrap();
    for &(_, d) in &on {
        assert_relative_eq!(d, 1.0, max_relative = 0.1);
    }

    let touching = shapes::dumbbell(0.0, 0.0, 1.0, 0.05).unwrap();
    let atoms2 = quadrature_varifold(&touching, QuadratureOrder::EdgeMidpoints);
    let at_touch = density_profile(&atoms2, &Point3::origin(), &[0.4, 0.3, 0.2]).unwrap();
    for &(_, d) in &at_touch {
        assert_relative_eq!(d, 2.0, max_relative = 0.1);
    }

    let far = density_profile(&atoms, &Point3::new(6.0, 0.0, 0.0), &[3.0, 2.0]).unwrap();
    assert!(far.iter().all(|&(_, d)| d == 0.0));
}

#[test]
fn density_profile_rejects_unresolvable_radius() {
    let mesh = shapes::sphere(1.0, 2);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    assert!(matches!(
        density_profile(&atoms, &Point3::new(1.0, 0.0, 0.0), &[0.4, 1e-3]),
        Err(VarifoldError::RhoBelowResolution { .. })
    ));
}

#[test]
fn density_profile_is_scale_invariant() {
    let mesh = shapes::sphere(1.0, 4);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let x0 = Point3::new(1.0, 0.0, 0.0);
    let base = density_profile(&atoms, &x0, &[0.4, 0.3]).unwrap();
    let scaled_mesh = mesh.transform(2.0, Vector3::zeros()).unwrap();
    let scaled_atoms = quadrature_varifold(&scaled_mesh, QuadratureOrder::Centroid);
    let scaled = density_profile(&scaled_atoms, &Point3::new(2.0, 0.0, 0.0), &[0.8, 0.6]).unwrap();
    for (&(_, a), &(_, b)) in base.iter().zip(&scaled) {
        assert_relative_eq!(a, b, max_relative = 1e-10);
    }
}

#[test]
fn reversal_swaps_spontaneous_curvature_sign() {
    let mesh = shapes::sphere(1.0, 3);
    let curv = mesh.mean_curvature().unwrap();
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let h_vec = atom_curvature(&mesh, &curv, QuadratureOrder::Centroid);
    let h_sc: Vec<f64> = atoms
        .atoms
        .iter()
        .zip(&h_vec)
        .map(|(a, h)| h.dot(&a.normal))
        .collect();
    let reversed = atoms.reverse_orientation();
    let h_sc_rev: Vec<f64> = reversed
        .atoms
        .iter()
        .zip(&h_vec)
        .map(|(a, h)| h.dot(&a.normal))
        .collect();
    for c0 in [-1.5, 0.0, 2.0] {
        let lhs = functionals::helfrich_energy_atoms(&atoms, &h_sc, c0);
        let rhs = functionals::helfrich_energy_atoms(&reversed, &h_sc_rev, -c0);
        assert_relative_eq!(lhs, rhs, max_relative = 1e-14);
    }
    // Willmore is orientation-blind.
    assert_relative_eq!(
        functionals::helfrich_energy_atoms(&atoms, &h_sc, 0.0),
        functionals::helfrich_energy_atoms(&reversed, &h_sc_rev, 0.0),
        max_relative = 1e-14
    );

    let twice = reversed.reverse_orientation();
    for (a, b) in atoms.atoms.iter().zip(&twice.atoms) {
        assert_eq!(a.normal, b.normal);
        assert_eq!(a.weight, b.weight);
    }
    assert_relative_eq!(atoms.total_weight(), reversed.total_weight(), max_relative = 1e-15);
}

#[test]
fn first_variation_closes_on_good_curvature() {
    let mesh = shapes::sphere(1.0, 4);
    let curv = mesh.mean_curvature().unwrap();
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let h = atom_curvature(&mesh, &curv, QuadratureOrder::Centroid);

    let constant = TestField::Constant(Vector3::new(0.3, -1.0, 0.7));
    let residual = first_variation_residual(&atoms, &h, &[constant]).unwrap();
    assert!(residual < 1e-2, "constant-field residual {residual}");

    // X = x checks 2 Area = - int <x, H>.
    let linear = TestField::Linear(Matrix3::identity(), Vector3::zeros());
    let residual = first_variation_residual(&atoms, &h, &[linear]).unwrap();
    assert!(residual < 2e-2, "linear-field residual {residual}");
}

#[test]
fn first_variation_detects_zero_curvature() {
    let mesh = shapes::sphere(1.0, 3);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let zeros = vec![Vector3::zeros(); atoms.atoms.len()];
    let linear = TestField::Linear(Matrix3::identity(), Vector3::zeros());
    let residual = first_variation_residual(&atoms, &zeros, &[linear]).unwrap();
    assert_relative_eq!(residual, 1.0, max_relative = 1e-6);
}

#[test]
fn first_variation_rejects_misaligned_field() {
    let mesh = shapes::sphere(1.0, 2);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let short = vec![Vector3::zeros(); 3];
    assert!(matches!(
        first_variation_residual(&atoms, &short, &[TestField::Constant(Vector3::x())]),
        Err(VarifoldError::MismatchedFieldLength { .. })
    ));
}

#[test]
fn csv_dump_has_expected_shape() {
    let mesh = shapes::sphere(1.0, 0);
    let atoms = quadrature_varifold(&mesh, QuadratureOrder::Centroid);
    let csv = atoms.to_csv();
    let mut lines = csv.lines();
    assert_eq!(lines.next().unwrap(), "x,y,z,nx,ny,nz,w");
    assert_eq!(lines.count(), 20);
}
