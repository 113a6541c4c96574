use approx::assert_relative_eq;
use super::*;
use crate::functionals;

const PI: f64 = std::f64::consts::PI;

#[test]
fn sphere_subdivision_zero_is_icosahedron() {
    let mesh = sphere(1.0, 0);
    assert_eq!(mesh.n_faces(), 20);
    assert_eq!(mesh.n_vertices(), 12);
    assert!(mesh.algebraic_volume() > 0.0);
}

#[test]
fn sphere_counts_and_measures() {
    let mesh = sphere(1.0, 4);
    assert_eq!(mesh.n_faces(), 5120);
    assert_eq!(mesh.n_vertices(), 2562);
    assert_relative_eq!(mesh.total_area(), 4.0 * PI, max_relative = 0.002);
    assert_relative_eq!(mesh.algebraic_volume(), 4.0 * PI / 3.0, max_relative = 0.005);
    assert_relative_eq!(sphere(2.0, 4).diameter(), 4.0, max_relative = 0.005);
}

#[test]
fn capsule_degenerates_to_sphere() {
    let capsule = capped_cylinder(0.0, 1.0, 0.06);
    assert_relative_eq!(capsule.total_area(), sphere(1.0, 4).total_area(), max_relative = 0.01);
}

#[test]
fn capsule_area_and_volume() {
    let capsule = capped_cylinder(2.0, 1.0, 0.06);
    assert_relative_eq!(capsule.total_area(), 2.0 * PI * 2.0 + 4.0 * PI, max_relative = 0.01);
    assert_relative_eq!(
        capsule.algebraic_volume(),
        PI * 2.0 + 4.0 * PI / 3.0,
        max_relative = 0.01
    );
}

#[test]
fn dumbbell_willmore_is_near_two_spheres() {
    let mesh = dumbbell(0.05, 0.0, 1.0, 0.06).unwrap();
    let curv = mesh.mean_curvature().unwrap();
    let willmore = functionals::willmore_energy(&curv);
    assert!(
        willmore > 8.0 * PI * 0.9 && willmore < 8.0 * PI * 1.5,
        "willmore = {willmore}"
    );
    assert_eq!(mesh.n_components(), 1);
}

#[test]
fn dumbbell_neck_energy_decreases_toward_bubble_limit() {
    let energies: Vec<f64> = [0.05, 0.035, 0.02]
        .iter()
        .map(|&a| {
            let mesh = dumbbell(a, 0.0, 1.0, 0.06).unwrap();
            functionals::helfrich_energy(&mesh.mean_curvature().unwrap(), 2.0)
        })
        .collect();
    assert!(
        energies[0] > energies[1] && energies[1] > energies[2],
        "{energies:?}"
    );
}

#[test]
fn dumbbell_rejects_oversized_neck() {
    assert!(matches!(
        dumbbell(0.2, 0.0, 0.5, 0.06),
        Err(ShapeError::NeckTooLarge { .. })
    ));
}

#[test]
fn touching_spheres_isoperimetric_ratio() {
    // Two unit spheres: A = 8 pi, V = 8 pi / 3, I = 72 pi.
    let a0: f64 = 8.0 * PI;
    let v0: f64 = 8.0 * PI / 3.0;
    assert_relative_eq!(a0.powi(3) / (v0 * v0), 72.0 * PI, max_relative = 1e-12);
    let mesh = dumbbell(0.0, 0.0, 1.0, 0.06).unwrap();
    assert_eq!(mesh.n_components(), 2);
    let ratio = mesh.total_area().powi(3) / mesh.algebraic_volume().powi(2);
    assert_relative_eq!(ratio, 72.0 * PI, max_relative = 0.02);
}

#[test]
fn torus_matches_closed_forms() {
    let mesh = torus(0.5, 0.05);
    assert_relative_eq!(
        mesh.algebraic_volume(),
        2.0 * PI * PI * 0.25 * 1.5,
        max_relative = 0.01
    );
    assert_relative_eq!(
        mesh.total_area(),
        2.0 * PI * 0.5 * 2.0 * PI * 1.5,
        max_relative = 0.01
    );
    assert_relative_eq!(
        mesh.reversed().algebraic_volume(),
        -mesh.algebraic_volume(),
        max_relative = 1e-12
    );
}

#[test]
fn mixed_orientation_volume_root() {
    // Bisection on the closed form 2 pi^2 r^2 (1 + r) = 4 pi / 3.
    let f = |r: f64| 2.0 * PI * PI * r * r * (1.0 + r) - 4.0 * PI / 3.0;
    let (mut lo, mut hi) = (0.1, 1.0);
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if f(mid) > 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let r_star = 0.5 * (lo + hi);
    assert!(hi - lo < 1e-6);
    assert!(f(r_star - 1e-5) < 0.0 && f(r_star + 1e-5) > 0.0);

    let mesh = sphere_torus_mixed(r_star * 1.05, 0.06);
    assert!(mesh.algebraic_volume() > 0.0);
    assert_eq!(mesh.n_components(), 2);
}

#[test]
fn lens_measures() {
    let (mesh, beta) = lens(0.05);
    // Two caps of opening angle pi/3: area 2 * 2 pi (1 - cos(pi/3)) = 2 pi.
    assert!(mesh.total_area() < 4.0 * PI);
    assert_relative_eq!(mesh.total_area(), 2.0 * PI, max_relative = 0.01);
    assert_relative_eq!(beta.total_mass(), 3.0 * PI, max_relative = 0.005);
    for atom in &beta.atoms {
        assert_relative_eq!(atom.direction.norm(), 1.0, max_relative = 1e-12);
        assert!(atom.position.z.abs() < 1e-12);
    }
}

#[test]
fn constructors_validate_and_orient() {
    let meshes = vec![
        sphere(1.0, 2),
        capped_cylinder(1.0, 0.8, 0.1),
        dumbbell(0.05, 0.5, 0.8, 0.1).unwrap(),
        torus(0.5, 0.1),
        lens(0.1).0,
    ];
    for mesh in &meshes {
        assert!(mesh.algebraic_volume() > 0.0);
        // Rebuild from raw lists to re-run validation.
        assert!(TriangleImmersion::build(mesh.vertices().to_vec(), mesh.faces().to_vec()).is_ok());
    }
}

#[test]
fn isoperimetric_match_two_spheres() {
    let tol = 2e-3;
    let (a, l, r) = match_isoperimetric(72.0 * PI, tol).unwrap();
    assert_eq!(a, 0.02);
    let mesh = dumbbell(a, l, r, 0.1).unwrap();
    let ratio = mesh.total_area().powi(3) / mesh.algebraic_volume().powi(2);
    assert_relative_eq!(ratio, 72.0 * PI, max_relative = 2.0 * tol);
}

#[test]
fn isoperimetric_match_small_target_shrinks_sphere() {
    let tol = 2e-3;
    let (a, l, r) = match_isoperimetric(40.0 * PI, tol).unwrap();
    assert_eq!(a, 0.02);
    assert_eq!(l, 0.0);
    assert!(r < 1.0, "r = {r}");
    let mesh = dumbbell(a, l, r, 0.1).unwrap();
    let ratio = mesh.total_area().powi(3) / mesh.algebraic_volume().powi(2);
    assert_relative_eq!(ratio, 40.0 * PI, max_relative = 2.0 * tol);
}

#[test]
fn isoperimetric_match_rejects_sub_spherical_target() {
    assert!(matches!(
        match_isoperimetric(30.0 * PI, 1e-3),
        Err(ShapeError::Unreachable { .. })
    ));
}

#[test]
fn dumbbell_junctions_are_tangency_matched() {
    // Slope continuity of the profile across the junctions shows up as a
    // bounded turning angle between consecutive mesh normals along a
    // meridian; sample the surface near the junction radius sqrt(a).
    let a = 0.05f64;
    let mesh = dumbbell(a, 0.0, 1.0, 0.05).unwrap();
    let junction_rho = a.sqrt();
    let normals = mesh.vertex_normals();
    let mut worst = 0.0f64;
    for (i, p) in mesh.vertices().iter().enumerate() {
        let rho = (p.x * p.x + p.y * p.y).sqrt();
        if p.y.abs() < 0.02 && p.x > 0.0 && (rho - junction_rho).abs() < 0.05 {
            for (j, q) in mesh.vertices().iter().enumerate() {
                let rho_q = (q.x * q.x + q.y * q.y).sqrt();
                if j != i
                    && q.y.abs() < 0.02
                    && q.x > 0.0
                    && (rho_q - junction_rho).abs() < 0.05
                    && (p - q).norm() < 0.03
                {
                    let angle = normals[i].dot(&normals[j]).clamp(-1.0, 1.0).acos();
                    worst = worst.max(angle / (p - q).norm());
                }
            }
        }
    }
    // Turning rate near the junction stays of the order of the cap
    // curvature; a slope mismatch would spike it.
    assert!(worst < 40.0, "normal turning rate {worst}");
}
