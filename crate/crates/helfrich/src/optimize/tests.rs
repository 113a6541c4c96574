use approx::assert_relative_eq;
use nalgebra::Point3;

use super::*;
use crate::functionals;
use crate::shapes;

const PI: f64 = std::f64::consts::PI;

fn perturbed_sphere(subdiv: u32, amplitude: f64) -> TriangleImmersion {
    let base = shapes::sphere(1.0, subdiv);
    let vertices: Vec<Point3<f64>> = base
        .vertices()
        .iter()
        .map(|p| {
            let bump = 1.0 + amplitude * (3.0 * p.x + 2.0 * p.y + p.z).sin();
            Point3::from(p.coords * bump)
        })
        .collect();
    TriangleImmersion::build(vertices, base.faces().to_vec()).unwrap()
}

#[test]
fn gradient_vanishes_along_smooth_modes_at_the_minimizer() {
    // The radius-1 sphere is the zero of H_{c0=2}; the radial directional
    // derivative must vanish there while staying O(1) off the minimum.
    let mesh = shapes::sphere(1.0, 3);
    let radial = |c0: f64| -> f64 {
        discrete_gradient(&mesh, c0)
            .iter()
            .zip(mesh.vertices())
            .map(|(g, p)| g.dot(&p.coords.normalize()))
            .sum()
    };
    let at_min = radial(2.0).abs();
    let off_min = radial(-2.0).abs();
    assert!(at_min < 1e-3 * off_min, "radial derivative {at_min} vs {off_min}");
    // dE/dr of pi (2 - c0 r)^2 at r = 1, c0 = -2 is 16 pi.
    assert_relative_eq!(off_min, 16.0 * PI, max_relative = 0.01);
}

#[test]
fn gradient_agrees_with_refined_finite_differences() {
    let mesh = perturbed_sphere(1, 0.05);
    let coarse = discrete_gradient_with_step(&mesh, -1.0, 1e-5);
    let fine = discrete_gradient_with_step(&mesh, -1.0, 5e-6);
    let gmax = coarse.iter().map(|v| v.norm()).fold(0.0, f64::max);
    for (a, b) in coarse.iter().zip(&fine) {
        if a.norm() > 1e-6 * gmax {
            let rel = (a - b).norm() / a.norm();
            assert!(rel <= 1e-3, "relative FD mismatch {rel}");
        }
    }
}

#[test]
fn gradient_respects_translation_invariance() {
    let mesh = perturbed_sphere(2, 0.03);
    let gradient = discrete_gradient(&mesh, -0.5);
    let sum = gradient.iter().fold(Vector3::zeros(), |acc, g| acc + g);
    let total: f64 = gradient.iter().map(|g| g.norm()).sum();
    assert!(sum.norm() <= 1e-8 * total, "drift {} vs {total}", sum.norm());
}

#[test]
fn projection_keeps_feasible_mesh() {
    let mesh = shapes::sphere(1.0, 3);
    let (a0, v0) = (mesh.total_area(), mesh.algebraic_volume());
    let projected = project_constraints(&mesh, a0, v0).unwrap();
    let drift = projected
        .vertices()
        .iter()
        .zip(mesh.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(drift < 1e-6, "drift {drift}");
}

#[test]
fn projection_rescales_inflated_sphere() {
    let unit = shapes::sphere(1.0, 3);
    let (a0, v0) = (unit.total_area(), unit.algebraic_volume());
    let inflated = shapes::sphere(1.1, 3);
    let projected = project_constraints(&inflated, a0, v0).unwrap();
    let worst = projected
        .vertices()
        .iter()
        .zip(unit.vertices())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);
    assert!(worst < 1e-4, "vertex error {worst}");
}

#[test]
fn projection_rejects_infeasible_targets() {
    let mesh = shapes::sphere(1.0, 2);
    // Volume too large for the area.
    assert!(matches!(
        project_constraints(&mesh, 4.0 * PI, 8.0),
        Err(OptimizeError::InfeasibleTargets { .. })
    ));
    // Far outside the 20% basin.
    assert!(matches!(
        project_constraints(&mesh, 16.0 * PI, 4.0 * PI / 3.0),
        Err(OptimizeError::ProjectionDiverged { .. })
    ));
}

#[test]
fn flow_relaxes_inflated_sphere_to_unit_sphere() {
    let opts = FlowOptions {
        max_iter: 40,
        step0: 1e-3,
        tol: 1e-6,
        ..FlowOptions::default()
    };
    let state = minimize_constrained(
        &shapes::sphere(1.05, 3),
        2.0,
        4.0 * PI,
        4.0 * PI / 3.0,
        &opts,
    )
    .unwrap();
    assert!(state.targets_adjusted);
    assert!(state.energy_history.last().unwrap() < &0.05);
    assert!(state
        .energy_history
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12));
    for row in &state.log {
        assert!(row.residual_area <= 1e-6, "area residual {}", row.residual_area);
        assert!(row.residual_volume <= 1e-6, "volume residual {}", row.residual_volume);
    }
    // Hausdorff-style distance to the unit sphere.
    let worst = state
        .mesh
        .vertices()
        .iter()
        .map(|p| (p.coords.norm() - 1.0).abs())
        .fold(0.0, f64::max);
    assert!(worst < 0.02, "distance to unit sphere {worst}");
    // Energy dominates the CMC deficit of the final mesh.
    let (deficit, _) = functionals::cmc_deficit(&state.mesh.mean_curvature().unwrap());
    assert!(state.energy_history.last().unwrap() + 1e-12 >= deficit);
}

#[test]
fn flow_rounds_a_capsule_under_willmore_descent() {
    let opts = FlowOptions {
        max_iter: 200,
        step0: 2e-3,
        tol: 1e-6,
        monitor_every: 50,
        ..FlowOptions::default()
    };
    let state = minimize_constrained(
        &shapes::capped_cylinder(0.5, 0.9, 0.12),
        0.0,
        4.0 * PI,
        4.0 * PI / 3.0,
        &opts,
    )
    .unwrap();
    assert!(state
        .energy_history
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12));
    let final_energy = *state.energy_history.last().unwrap();
    assert!(final_energy < 4.0 * PI * 1.02, "final Willmore {final_energy}");
}

#[test]
fn flow_on_bubble_targets_alarms_or_plateaus() {
    let opts = FlowOptions {
        max_iter: 30,
        step0: 5e-4,
        tol: 1e-6,
        monitor_every: 5,
        ..FlowOptions::default()
    };
    let state = minimize_constrained(
        &shapes::dumbbell(0.1, 0.0, 1.0, 0.15).unwrap(),
        2.0,
        8.0 * PI,
        8.0 * PI / 3.0,
        &opts,
    )
    .unwrap();
    assert!(state
        .energy_history
        .windows(2)
        .all(|w| w[1] <= w[0] + 1e-12));
    let alarmed = state.termination == TerminationReason::MonitorAlarm;
    let plateaued = *state.energy_history.last().unwrap() < 1.0;
    assert!(
        alarmed || plateaued,
        "termination {:?}, final energy {}",
        state.termination,
        state.energy_history.last().unwrap()
    );
}

#[test]
fn penalized_sweep_reproduces_nonexistence_signature() {
    let mut last = f64::INFINITY;
    for k in 0..=6 {
        let r = 0.5f64.powi(k);
        let value =
            functionals::penalized_energy(&shapes::sphere(r, 3), -1.0, 0.1, 0.1).unwrap();
        assert!(value < last, "not strictly decreasing at k = {k}");
        assert!(value > 4.0 * PI, "crossed 4 pi at k = {k}");
        last = value;
    }
}

#[test]
fn sheet_distance_reflects_geometry() {
    // A single sphere reads its own three-ring chord floor; a far-away
    // second component must not lower it.
    let a = shapes::sphere(1.0, 2);
    let floor = min_sheet_distance(&a);
    let b = shapes::sphere(1.0, 2)
        .transform(1.0, Vector3::new(4.0, 0.0, 0.0))
        .unwrap();
    let mut vertices = a.vertices().to_vec();
    let offset = vertices.len();
    vertices.extend_from_slice(b.vertices());
    let mut faces = a.faces().to_vec();
    faces.extend(b.faces().iter().map(|&[x, y, z]| [x + offset, y + offset, z + offset]));
    let union = TriangleImmersion::build(vertices, faces).unwrap();
    assert_relative_eq!(min_sheet_distance(&union), floor, max_relative = 1e-12);

    // Touching sheets collapse the distance to zero.
    let touching = shapes::dumbbell(0.0, 0.0, 1.0, 0.1).unwrap();
    let d = min_sheet_distance(&touching);
    assert!(d < 0.05 * floor, "sheet distance {d} vs floor {floor}");
}
