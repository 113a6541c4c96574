//! Constructors for the example surfaces: spheres, capsules, catenoid-neck
//! dumbbells, tori, the mixed-orientation sphere+torus pair, the lens with
//! its singular boundary circle, and isoperimetric-ratio matching.
//!
//! All constructors return inner-normal orientation (positive algebraic
//! volume), except `sphere_torus_mixed` whose sphere component deliberately
//! carries the outer normal.

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::geomcore::TriangleImmersion;
use crate::varifold::{BoundaryAtom, BoundaryAtoms};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ShapeError {
    #[error("neck size {a} too large; must satisfy a < min(1, r)/4 = {limit}")]
    NeckTooLarge { a: f64, limit: f64 },
    #[error("isoperimetric target {target} unreachable: {reason}")]
    Unreachable { target: f64, reason: String },
}

/// Icosphere of radius `r`; `subdivisions` in `[0, 7]`.
pub fn sphere(r: f64, subdivisions: u32) -> TriangleImmersion {
    assert!(r > 0.0, "radius must be positive");
    assert!(subdivisions <= 7, "subdivisions capped at 7");
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ]
    .iter()
    .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
    .collect();
    // Outward winding; flipped below for the inner-normal convention.
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint = std::collections::HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for &[a, b, c] in &faces {
            let mut mid = |i: usize, j: usize, vertices: &mut Vec<Vector3<f64>>| {
                let key = (i.min(j), i.max(j));
                *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[i] + vertices[j]).normalize();
                    vertices.push(m);
                    vertices.len() - 1
                })
            };
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [ab, b, bc], [ca, bc, c], [ab, bc, ca]]);
        }
        faces = next;
    }

    let points: Vec<Point3<f64>> = vertices.iter().map(|v| Point3::from(v * r)).collect();
    let faces: Vec<[usize; 3]> = faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
    TriangleImmersion::build(points, faces).expect("icosphere is valid")
}

/// Capsule: cylinder of length `l >= 0` and radius `r` capped by hemispheres.
/// `l = 0` degenerates to a revolved sphere of radius `r`.
pub fn capped_cylinder(l: f64, r: f64, resolution: f64) -> TriangleImmersion {
    assert!(l >= 0.0 && r > 0.0 && resolution > 0.0);
    let mut profile = Vec::new();
    let ds = |rho: f64| grade_step(rho, r, resolution);
    // Bottom cap, pole to equator.
    sample_circle_arc(&mut profile, r, -l / 2.0, std::f64::consts::PI, std::f64::consts::PI / 2.0, &ds);
    // Wall.
    if l > 0.0 {
        let mut z = -l / 2.0;
        loop {
            z += resolution;
            if z >= l / 2.0 {
                break;
            }
            profile.push((r, z));
        }
    }
    // Top cap, equator to pole.
    sample_circle_arc(&mut profile, r, l / 2.0, std::f64::consts::PI / 2.0, 0.0, &ds);
    let m = angular_segments(r, resolution);
    revolve_open(&profile, m)
}

/// Torus obtained by revolving a circle of radius `r` centered at distance
/// `1 + r` from the axis.
pub fn torus(r: f64, resolution: f64) -> TriangleImmersion {
    torus_with_center(r, 1.0 + r, resolution)
}

/// Torus with explicit tube radius `r` and center-circle radius `center`.
pub fn torus_with_center(r: f64, center: f64, resolution: f64) -> TriangleImmersion {
    assert!(r > 0.0 && center > r && resolution > 0.0);
    let k = ((2.0 * std::f64::consts::PI * r / resolution).ceil() as usize).max(12);
    let profile: Vec<(f64, f64)> = (0..k)
        .map(|i| {
            let psi = 2.0 * std::f64::consts::PI * i as f64 / k as f64;
            (center + r * psi.cos(), r * psi.sin())
        })
        .collect();
    let m = angular_segments(center + r, resolution);
    revolve_closed(&profile, m)
}

/// Disjoint union of the unit sphere with outer normals and `torus(r)` with
/// inner normals; the mixed orientation of the paper's volume example.
pub fn sphere_torus_mixed(r: f64, resolution: f64) -> TriangleImmersion {
    assert!(r > 0.0);
    let subdiv = subdiv_for_resolution(1.0, resolution);
    let s = sphere(1.0, subdiv).reversed();
    let t = torus(r, resolution);
    merge(&[&s, &t])
}

/// Dumbbell: capsule of radius 1 and length `l`, joined to a sphere of
/// radius `r <= 1` through a catenoid neck of waist radius `a`, with
/// C^1-matched junctions. `a = 0` gives the limit configuration of two
/// bodies tangent at the origin (two components).
pub fn dumbbell(a: f64, l: f64, r: f64, resolution: f64) -> Result<TriangleImmersion, ShapeError> {
    assert!(l >= 0.0 && r > 0.0 && r <= 1.0 && resolution > 0.0);
    let limit = r.min(1.0) / 4.0;
    if a >= limit {
        return Err(ShapeError::NeckTooLarge { a, limit });
    }
    if a == 0.0 {
        // Tangent limit: capsule below, sphere above, touching at the origin.
        let capsule = capped_cylinder(l, 1.0, resolution)
            .transform(1.0, Vector3::new(0.0, 0.0, -(l / 2.0 + 1.0)))
            .unwrap();
        let ball = revolved_sphere(r, resolution)
            .transform(1.0, Vector3::new(0.0, 0.0, r))
            .unwrap();
        return Ok(merge(&[&capsule, &ball]));
    }

    let pi = std::f64::consts::PI;
    // Tangency: a circle of radius R meets the catenoid rho = a*cosh(u/a)
    // where sin(theta) = sqrt(a/R), giving junction radius sqrt(a*R).
    let u_big = (1.0f64 / a).sqrt().acosh();
    let u_small = (r / a).sqrt().acosh();
    let z_big = -a * u_big;
    let z_small = a * u_small;
    let theta_big = (a.sqrt()).asin();
    let theta_small = ((a / r).sqrt()).asin();
    let cap_center = z_big - theta_big.cos();
    let ball_center = z_small + r * theta_small.cos();

    let ds = |rho: f64| grade_step(rho, 1.0, resolution);
    let mut profile = Vec::new();
    // Capsule bottom cap: pole to equator.
    sample_circle_arc(&mut profile, 1.0, cap_center - l, pi, pi / 2.0, &ds);
    if l > 0.0 {
        let mut z = cap_center - l;
        loop {
            z += resolution;
            if z >= cap_center {
                break;
            }
            profile.push((1.0, z));
        }
    }
    // Capsule top cap: equator up to the junction angle.
    sample_circle_arc(&mut profile, 1.0, cap_center, pi / 2.0, theta_big, &ds);
    let junction_a = profile.len() - 1;
    // Catenoid bridge.
    let mut u = -u_big;
    loop {
        let rho = a * u.cosh();
        u += ds(rho) / (a * u.cosh());
        if u >= u_small {
            break;
        }
        profile.push((a * u.cosh(), a * u));
    }
    profile.push((a * u_small.cosh(), z_small));
    let junction_b = profile.len() - 1;
    // Small sphere: junction angle up to the top pole.
    sample_circle_arc(&mut profile, r, ball_center, pi - theta_small, 0.0, &ds);

    fair_junction(&mut profile, junction_a, 3);
    fair_junction(&mut profile, junction_b, 3);

    let m = angular_segments(1.0, resolution);
    Ok(revolve_open(&profile, m))
}

/// Lens: two unit-sphere caps of opening angle pi/3 glued along the circle
/// of radius sqrt(3)/2 in the plane z = 0, plus the boundary atoms carrying
/// the singular first-variation part (line density sqrt(3), radial
/// direction).
///
/// The mesh is closed as a set but has a crease along the circle; discrete
/// curvature energies across the crease are not meaningful.
pub fn lens(resolution: f64) -> (TriangleImmersion, BoundaryAtoms) {
    let pi = std::f64::consts::PI;
    let ds = |rho: f64| grade_step(rho, 1.0, resolution);
    let mut profile = Vec::new();
    // Upper cap (sphere centered at z = -1/2), pole down to the rim.
    sample_circle_arc(&mut profile, 1.0, -0.5, 0.0, pi / 3.0, &ds);
    let rim = profile.len() - 1;
    debug_assert!((profile[rim].0 - 3.0f64.sqrt() / 2.0).abs() < 1e-12);
    // Lower cap (sphere centered at z = +1/2), rim down to the pole.
    sample_circle_arc(&mut profile, 1.0, 0.5, 2.0 * pi / 3.0, pi, &ds);

    let m = angular_segments(1.0, resolution);
    let mesh = revolve_open(&profile, m);

    let radius = 3.0f64.sqrt() / 2.0;
    let n_atoms = m.max(64);
    let weight = 3.0f64.sqrt() * (2.0 * pi * radius / n_atoms as f64);
    let atoms = (0..n_atoms)
        .map(|j| {
            let phi = 2.0 * pi * (j as f64 + 0.5) / n_atoms as f64;
            BoundaryAtom {
                position: Point3::new(radius * phi.cos(), radius * phi.sin(), 0.0),
                direction: Vector3::new(phi.cos(), phi.sin(), 0.0),
                weight,
            }
        })
        .collect();
    (mesh, BoundaryAtoms::new(atoms))
}

/// Find dumbbell parameters `(a, l, r)` whose isoperimetric ratio
/// `I = A^3/V^2` matches `target` to relative tolerance `tol`.
///
/// Two-branch continuation: with the neck at its floor, a target below the
/// two-sphere ratio is reached by shrinking the small sphere, a larger one
/// by lengthening the capsule.
pub fn match_isoperimetric(target: f64, tol: f64) -> Result<(f64, f64, f64), ShapeError> {
    const A_FLOOR: f64 = 0.02;
    const RESOLUTION: f64 = 0.1;
    let iso_min = 36.0 * std::f64::consts::PI;
    if target < iso_min {
        return Err(ShapeError::Unreachable {
            target,
            reason: format!("below the isoperimetric bound {iso_min:.6}"),
        });
    }
    let measure = |a: f64, l: f64, r: f64| -> f64 {
        let mesh = dumbbell(a, l, r, RESOLUTION).expect("neck below floor limit");
        let area = mesh.total_area();
        let vol = mesh.algebraic_volume();
        area.powi(3) / vol.powi(2)
    };
    let i_ref = measure(A_FLOOR, 0.0, 1.0);
    let bisect = |mut lo: f64, mut hi: f64, eval: &dyn Fn(f64) -> f64| -> (f64, f64) {
        // eval must be monotone increasing on [lo, hi].
        let mut mid = 0.5 * (lo + hi);
        for _ in 0..60 {
            mid = 0.5 * (lo + hi);
            let v = eval(mid);
            if (v - target).abs() <= tol * target {
                return (mid, v);
            }
            if v > target {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        (mid, eval(mid))
    };
    if target <= i_ref {
        // Shrink the small sphere.
        let r_min = (4.0 * A_FLOOR * 1.05).max(0.1);
        let low = measure(A_FLOOR, 0.0, r_min);
        if target < low * (1.0 - tol) {
            return Err(ShapeError::Unreachable {
                target,
                reason: format!("below the smallest reachable ratio {low:.6} at r = {r_min}"),
            });
        }
        let (r, value) = bisect(r_min, 1.0, &|r| measure(A_FLOOR, 0.0, r));
        if (value - target).abs() > tol * target {
            return Err(ShapeError::Unreachable {
                target,
                reason: "bisection on r failed to bracket".into(),
            });
        }
        Ok((A_FLOOR, 0.0, r))
    } else {
        // Lengthen the capsule.
        let mut l_hi = 0.5;
        while measure(A_FLOOR, l_hi, 1.0) < target {
            l_hi *= 2.0;
            if l_hi > 64.0 {
                return Err(ShapeError::Unreachable {
                    target,
                    reason: "target above the reachable capsule range".into(),
                });
            }
        }
        let (l, value) = bisect(0.0, l_hi, &|l| measure(A_FLOOR, l, 1.0));
        if (value - target).abs() > tol * target {
            return Err(ShapeError::Unreachable {
                target,
                reason: "bisection on l failed to bracket".into(),
            });
        }
        Ok((A_FLOOR, l, 1.0))
    }
}

/// Revolution sphere (used where a pole-aligned mesh is needed).
fn revolved_sphere(r: f64, resolution: f64) -> TriangleImmersion {
    capped_cylinder(0.0, r, resolution)
}

fn subdiv_for_resolution(r: f64, resolution: f64) -> u32 {
    // Icosahedron edge is about 1.05 r; each subdivision halves it.
    let mut subdiv = 0u32;
    let mut edge = 1.05 * r;
    while edge > resolution && subdiv < 7 {
        edge /= 2.0;
        subdiv += 1;
    }
    subdiv
}

/// Meridian step graded with the local radius so triangle aspect stays
/// bounded against the fixed angular segment count.
fn grade_step(rho: f64, rho_max: f64, resolution: f64) -> f64 {
    (resolution * rho / rho_max).max(resolution / 8.0)
}

fn angular_segments(rho_max: f64, resolution: f64) -> usize {
    ((2.0 * std::f64::consts::PI * rho_max / resolution).ceil() as usize).max(16)
}

/// Append points of the circle arc (R sin psi, center_z + R cos psi) walking
/// psi from `from` to `to` with graded steps. Endpoints included.
fn sample_circle_arc(
    profile: &mut Vec<(f64, f64)>,
    radius: f64,
    center_z: f64,
    from: f64,
    to: f64,
    ds: &dyn Fn(f64) -> f64,
) {
    let point = |psi: f64| (radius * psi.sin(), center_z + radius * psi.cos());
    let start = point(from);
    match profile.last() {
        Some(&(rho, z)) if (rho - start.0).abs() < 1e-12 && (z - start.1).abs() < 1e-12 => {}
        _ => profile.push(start),
    }
    let dir = (to - from).signum();
    let mut psi = from;
    loop {
        let rho = radius * psi.sin().abs();
        psi += dir * ds(rho) / radius;
        if (to - psi) * dir <= 0.0 {
            break;
        }
        profile.push(point(psi));
    }
    profile.push(point(to));
}

/// One local Laplacian pass on the profile around index `at`.
fn fair_junction(profile: &mut [(f64, f64)], at: usize, window: usize) {
    let lo = at.saturating_sub(window).max(1);
    let hi = (at + window).min(profile.len().saturating_sub(2));
    let snapshot: Vec<(f64, f64)> = profile.to_vec();
    for k in lo..=hi {
        let (pr, pz) = snapshot[k - 1];
        let (cr, cz) = snapshot[k];
        let (nr, nz) = snapshot[k + 1];
        profile[k] = ((pr + 2.0 * cr + nr) / 4.0, (pz + 2.0 * cz + nz) / 4.0);
    }
}

/// Revolve an open profile whose first and last points are poles (rho = 0).
fn revolve_open(profile: &[(f64, f64)], m: usize) -> TriangleImmersion {
    assert!(profile.len() >= 3);
    assert!(profile[0].0.abs() < 1e-9 && profile[profile.len() - 1].0.abs() < 1e-9);
    let rings = &profile[1..profile.len() - 1];
    assert!(rings.iter().all(|&(rho, _)| rho > 1e-9));

    let mut vertices = Vec::with_capacity(rings.len() * m + 2);
    vertices.push(Point3::new(0.0, 0.0, profile[0].1));
    for &(rho, z) in rings {
        for j in 0..m {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            vertices.push(Point3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    vertices.push(Point3::new(0.0, 0.0, profile[profile.len() - 1].1));
    let top = vertices.len() - 1;
    let ring = |k: usize, j: usize| 1 + k * m + (j % m);

    let mut faces = Vec::with_capacity(2 * rings.len() * m);
    for j in 0..m {
        faces.push([0, ring(0, j + 1), ring(0, j)]);
    }
    for k in 0..rings.len() - 1 {
        for j in 0..m {
            let (a, b) = (ring(k, j), ring(k, j + 1));
            let (c, d) = (ring(k + 1, j), ring(k + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    let last = rings.len() - 1;
    for j in 0..m {
        faces.push([top, ring(last, j), ring(last, j + 1)]);
    }
    finish(vertices, faces)
}

/// Revolve a closed profile (torus-like).
fn revolve_closed(profile: &[(f64, f64)], m: usize) -> TriangleImmersion {
    let k_max = profile.len();
    let mut vertices = Vec::with_capacity(k_max * m);
    for &(rho, z) in profile {
        for j in 0..m {
            let phi = 2.0 * std::f64::consts::PI * j as f64 / m as f64;
            vertices.push(Point3::new(rho * phi.cos(), rho * phi.sin(), z));
        }
    }
    let idx = |k: usize, j: usize| (k % k_max) * m + (j % m);
    let mut faces = Vec::with_capacity(2 * k_max * m);
    for k in 0..k_max {
        for j in 0..m {
            let (a, b) = (idx(k, j), idx(k, j + 1));
            let (c, d) = (idx(k + 1, j), idx(k + 1, j + 1));
            faces.push([a, b, d]);
            faces.push([a, d, c]);
        }
    }
    finish(vertices, faces)
}

/// Build and orient for positive algebraic volume (inner normals).
fn finish(vertices: Vec<Point3<f64>>, faces: Vec<[usize; 3]>) -> TriangleImmersion {
    let mesh = TriangleImmersion::build(vertices, faces).expect("constructor produces a valid mesh");
    if mesh.algebraic_volume() < 0.0 {
        mesh.reversed()
    } else {
        mesh
    }
}

/// Concatenate meshes into a single vertex/face list.
fn merge(parts: &[&TriangleImmersion]) -> TriangleImmersion {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for part in parts {
        let offset = vertices.len();
        vertices.extend_from_slice(part.vertices());
        faces.extend(
            part.faces()
                .iter()
                .map(|&[a, b, c]| [a + offset, b + offset, c + offset]),
        );
    }
    TriangleImmersion::build(vertices, faces).expect("merged mesh is valid")
}

#[cfg(test)]
mod tests;
