//! Concentrated volume: the singular integral `-int <x - x0, n>/|x - x0|^2`
//! over a surface, by adaptive triangle quadrature, and the equivalent
//! solid-integral route `int Theta/|x - x0|^2` over constructive regions.

use nalgebra::{Point3, Vector3};
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::geomcore::{
    closest_point_on_triangle, triangle_area, TriangleImmersion,
};
use crate::numeric::pairwise_sum;
use crate::varifold::OrientedVarifoldAtoms;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ConcVolError {
    #[error("tolerance {0} outside (1e-8, 1e-1)")]
    TolOutOfRange(f64),
    #[error("quadrature failed to converge: residual {residual:.3e} above {allowed:.3e} at depth {depth}")]
    NonConvergent {
        residual: f64,
        allowed: f64,
        depth: usize,
    },
    #[error("volume must be nonnegative, got {0}")]
    NegativeVolume(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Route {
    SurfaceQuadrature,
    SolidIntegral,
}

/// Value of a concentrated-volume integral with its error estimate,
/// subdivision depth, and the route that produced it.
#[derive(Debug, Clone, Serialize)]
pub struct ConcVolResult {
    pub value: f64,
    pub abs_error_est: f64,
    pub depth: usize,
    pub route: Route,
}

const MAX_DEPTH: usize = 12;

/// Concentrated volume of a mesh at `x0` by adaptive surface quadrature.
///
/// Faces near `x0` are recursively 4-subdivided until the two-level
/// Richardson difference falls under the face's share of `tol` times the
/// running total. A face carrying `x0` is split at the closest point first.
pub fn concentrated_volume(
    mesh: &TriangleImmersion,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<ConcVolResult, ConcVolError> {
    if !(1e-8..=1e-1).contains(&tol) || tol == 1e-8 {
        return Err(ConcVolError::TolOutOfRange(tol));
    }

    // x0 on a vertex: split the incident faces at their centroids so no
    // quadrature node coincides with the singularity.
    let scale = mesh.mean_edge_length();
    let vertex_hit = mesh
        .vertices()
        .iter()
        .position(|p| (p - x0).norm() < 1e-12 * scale.max(1.0));

    let tris: Vec<[Point3<f64>; 3]> = (0..mesh.n_faces())
        .flat_map(|f| {
            let tri = mesh.face_points(f);
            let split = vertex_hit.is_some_and(|v| mesh.faces()[f].contains(&v));
            if split {
                let c = Point3::from((tri[0].coords + tri[1].coords + tri[2].coords) / 3.0);
                vec![
                    [tri[0], tri[1], c],
                    [tri[1], tri[2], c],
                    [tri[2], tri[0], c],
                ]
            } else {
                vec![tri]
            }
        })
        .collect();

    // Rough pass fixes the error budget.
    let rough: Vec<f64> = tris.iter().map(|t| quad3(t, x0)).collect();
    let rough_total = pairwise_sum(&rough).abs().max(1e-12);
    let total_area: f64 = pairwise_sum(&tris.iter().map(|t| triangle_area(&t[0], &t[1], &t[2])).collect::<Vec<_>>());

    let results: Vec<(f64, f64, usize)> = tris
        .par_iter()
        .map(|tri| {
            let area = triangle_area(&tri[0], &tri[1], &tri[2]);
            let circumradius = max_edge(tri) / 3.0f64.sqrt();
            let near = closest_distance(tri, x0) <= 3.0 * circumradius;
            if !near {
                return (quad3(tri, x0), 0.0, 0);
            }
            let budget = tol * rough_total * (area / total_area).max(1e-6);
            let mut out = Accum::default();
            refine(tri, x0, budget, 0, &mut out);
            (out.value, out.error, out.depth)
        })
        .collect();

    let value = pairwise_sum(&results.iter().map(|r| r.0).collect::<Vec<_>>());
    let error = pairwise_sum(&results.iter().map(|r| r.1).collect::<Vec<_>>());
    let depth = results.iter().map(|r| r.2).max().unwrap_or(0);

    let allowed = 10.0 * tol * value.abs().max(rough_total);
    if depth >= MAX_DEPTH && error > allowed {
        return Err(ConcVolError::NonConvergent {
            residual: error,
            allowed,
            depth,
        });
    }
    Ok(ConcVolResult {
        value,
        abs_error_est: error,
        depth,
        route: Route::SurfaceQuadrature,
    })
}

/// Direct atom-sum concentrated volume (for already-discretized varifolds).
pub fn concentrated_volume_atoms(varifold: &OrientedVarifoldAtoms, x0: &Point3<f64>) -> f64 {
    let terms: Vec<f64> = varifold
        .atoms
        .iter()
        .map(|a| {
            let d = a.position - x0;
            let d2 = d.norm_squared();
            if d2 < 1e-28 {
                0.0
            } else {
                -a.weight * d.dot(&a.normal) / d2
            }
        })
        .collect();
    pairwise_sum(&terms)
}

/// Algebraic volume at `x0`: `-(1/3) sum w <x - x0, n>`. Independent of `x0`
/// for atoms sourced from a closed mesh.
pub fn algebraic_volume_at(varifold: &OrientedVarifoldAtoms, x0: &Point3<f64>) -> f64 {
    let terms: Vec<f64> = varifold
        .atoms
        .iter()
        .map(|a| -a.weight * (a.position - x0).dot(&a.normal) / 3.0)
        .collect();
    pairwise_sum(&terms)
}

/// Closed-form upper bound `3 (4 pi^2 V)^{1/3}` on the concentrated volume
/// over on-surface points of a quasi-embedding with enclosed volume `V`.
pub fn cvol_upper_bound(volume: f64) -> Result<f64, ConcVolError> {
    if volume < 0.0 {
        return Err(ConcVolError::NegativeVolume(volume));
    }
    Ok(3.0 * (4.0 * std::f64::consts::PI.powi(2) * volume).cbrt())
}

#[derive(Default)]
struct Accum {
    value: f64,
    error: f64,
    depth: usize,
}

fn refine(tri: &[Point3<f64>; 3], x0: &Point3<f64>, budget: f64, depth: usize, out: &mut Accum) {
    let parent = quad3(tri, x0);
    let children = split4(tri);
    let fine: f64 = children.iter().map(|c| quad3(c, x0)).sum();
    let diff = (fine - parent).abs();
    out.depth = out.depth.max(depth + 1);
    if diff < budget || depth + 1 >= MAX_DEPTH {
        out.value += fine;
        out.error += diff;
        return;
    }
    for child in &children {
        refine(child, x0, budget / 4.0, depth + 1, out);
    }
}

/// Degree-2 edge-midpoint rule for the concentrated-volume integrand.
fn quad3(tri: &[Point3<f64>; 3], x0: &Point3<f64>) -> f64 {
    let n = (tri[1] - tri[0]).cross(&(tri[2] - tri[0]));
    let norm = n.norm();
    if norm < 1e-300 {
        return 0.0;
    }
    let area = 0.5 * norm;
    let n = n / norm;
    let mut sum = 0.0;
    for (a, b) in [(0, 1), (1, 2), (2, 0)] {
        let y = Point3::from((tri[a].coords + tri[b].coords) / 2.0);
        sum += integrand(&y, x0, &n);
    }
    sum * area / 3.0
}

fn integrand(y: &Point3<f64>, x0: &Point3<f64>, n: &Vector3<f64>) -> f64 {
    let d = y - x0;
    let d2 = d.norm_squared();
    if d2 < 1e-28 {
        // The in-plane limit of <d, n>/|d|^2 is zero.
        return 0.0;
    }
    -d.dot(n) / d2
}

fn split4(tri: &[Point3<f64>; 3]) -> [[Point3<f64>; 3]; 4] {
    let m01 = Point3::from((tri[0].coords + tri[1].coords) / 2.0);
    let m12 = Point3::from((tri[1].coords + tri[2].coords) / 2.0);
    let m20 = Point3::from((tri[2].coords + tri[0].coords) / 2.0);
    [
        [tri[0], m01, m20],
        [m01, tri[1], m12],
        [m20, m12, tri[2]],
        [m01, m12, m20],
    ]
}

fn max_edge(tri: &[Point3<f64>; 3]) -> f64 {
    (tri[0] - tri[1])
        .norm()
        .max((tri[1] - tri[2]).norm())
        .max((tri[2] - tri[0]).norm())
}

fn closest_distance(tri: &[Point3<f64>; 3], x0: &Point3<f64>) -> f64 {
    (x0 - closest_point_on_triangle(x0, &tri[0], &tri[1], &tri[2])).norm()
}

/// Constructive solid carrying an integer multiplicity for enclosed-volume
/// integrals.
#[derive(Debug, Clone)]
pub enum SolidRegion {
    Ball {
        center: Point3<f64>,
        radius: f64,
    },
    /// Tube radius `r`, center circle radius `1 + r`, axis z.
    SolidTorus {
        tube_radius: f64,
    },
    /// Cylinder of the given length and radius along z, capped by
    /// hemispheres.
    CappedCylinderSolid {
        length: f64,
        radius: f64,
    },
    WeightedUnion(Vec<(SolidRegion, u32)>),
}

impl SolidRegion {
    /// Multiplicity Theta at a point.
    pub fn multiplicity(&self, p: &Point3<f64>) -> f64 {
        match self {
            SolidRegion::Ball { center, radius } => {
                if (p - center).norm_squared() <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            SolidRegion::SolidTorus { tube_radius } => {
                let center = 1.0 + tube_radius;
                let rho = (p.x * p.x + p.y * p.y).sqrt();
                let d2 = (rho - center) * (rho - center) + p.z * p.z;
                if d2 <= tube_radius * tube_radius {
                    1.0
                } else {
                    0.0
                }
            }
            SolidRegion::CappedCylinderSolid { length, radius } => {
                let half = length / 2.0;
                let z = p.z.clamp(-half, half);
                let d2 = p.x * p.x + p.y * p.y + (p.z - z) * (p.z - z);
                if d2 <= radius * radius {
                    1.0
                } else {
                    0.0
                }
            }
            SolidRegion::WeightedUnion(parts) => parts
                .iter()
                .map(|(region, theta)| *theta as f64 * region.multiplicity(p))
                .sum(),
        }
    }

    fn bounding_box(&self) -> (Point3<f64>, Point3<f64>) {
        match self {
            SolidRegion::Ball { center, radius } => (
                Point3::from(center.coords.add_scalar(-radius)),
                Point3::from(center.coords.add_scalar(*radius)),
            ),
            SolidRegion::SolidTorus { tube_radius } => {
                let reach = 1.0 + 2.0 * tube_radius;
                (
                    Point3::new(-reach, -reach, -tube_radius),
                    Point3::new(reach, reach, *tube_radius),
                )
            }
            SolidRegion::CappedCylinderSolid { length, radius } => {
                let half = length / 2.0 + radius;
                (
                    Point3::new(-radius, -radius, -half),
                    Point3::new(*radius, *radius, half),
                )
            }
            SolidRegion::WeightedUnion(parts) => {
                let boxes: Vec<_> = parts.iter().map(|(r, _)| r.bounding_box()).collect();
                let lo = Point3::new(
                    boxes.iter().map(|b| b.0.x).fold(f64::INFINITY, f64::min),
                    boxes.iter().map(|b| b.0.y).fold(f64::INFINITY, f64::min),
                    boxes.iter().map(|b| b.0.z).fold(f64::INFINITY, f64::min),
                );
                let hi = Point3::new(
                    boxes.iter().map(|b| b.1.x).fold(f64::NEG_INFINITY, f64::max),
                    boxes.iter().map(|b| b.1.y).fold(f64::NEG_INFINITY, f64::max),
                    boxes.iter().map(|b| b.1.z).fold(f64::NEG_INFINITY, f64::max),
                );
                (lo, hi)
            }
        }
    }
}

const SOLID_NEAR_DEPTH: usize = 10;
const SOLID_BOUNDARY_DEPTH: usize = 4;

/// Concentrated volume through the solid route
/// `int Theta(x)/|x - x0|^2 dL^3`.
///
/// Balls with `x0` at the center or on the boundary use the closed forms
/// `4 pi r` and `2 pi r`; everything else uses stratified midpoint
/// quadrature on a grid, refined near the boundary and near `x0`.
pub fn concentrated_volume_solid(
    region: &SolidRegion,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<ConcVolResult, ConcVolError> {
    if !(1e-8..=1e-1).contains(&tol) || tol == 1e-8 {
        return Err(ConcVolError::TolOutOfRange(tol));
    }
    if let SolidRegion::Ball { center, radius } = region {
        let d = (x0 - center).norm();
        if d < 1e-12 * radius {
            return Ok(ConcVolResult {
                value: 4.0 * std::f64::consts::PI * radius,
                abs_error_est: 0.0,
                depth: 0,
                route: Route::SolidIntegral,
            });
        }
        if (d - radius).abs() < 1e-12 * radius {
            return Ok(ConcVolResult {
                value: 2.0 * std::f64::consts::PI * radius,
                abs_error_est: 0.0,
                depth: 0,
                route: Route::SolidIntegral,
            });
        }
    }

    let coarse = solid_grid_pass(region, x0, 32);
    let fine = solid_grid_pass(region, x0, 64);
    let error = (fine - coarse).abs();
    let allowed = 10.0 * tol * fine.abs().max(1e-12);
    if error > allowed {
        return Err(ConcVolError::NonConvergent {
            residual: error,
            allowed,
            depth: SOLID_NEAR_DEPTH,
        });
    }
    Ok(ConcVolResult {
        value: fine,
        abs_error_est: error,
        depth: SOLID_NEAR_DEPTH,
        route: Route::SolidIntegral,
    })
}

fn solid_grid_pass(region: &SolidRegion, x0: &Point3<f64>, n: usize) -> f64 {
    let (lo, hi) = region.bounding_box();
    let extent = hi - lo;
    let cell = extent.x.max(extent.y).max(extent.z) / n as f64;
    let (nx, ny, nz) = (
        (extent.x / cell).ceil() as usize,
        (extent.y / cell).ceil() as usize,
        (extent.z / cell).ceil() as usize,
    );
    let columns: Vec<f64> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (i, j) = (idx % nx, idx / nx);
            let mut column = Vec::with_capacity(nz);
            for k in 0..nz {
                let center = Point3::new(
                    lo.x + (i as f64 + 0.5) * cell,
                    lo.y + (j as f64 + 0.5) * cell,
                    lo.z + (k as f64 + 0.5) * cell,
                );
                column.push(solid_cell(region, x0, &center, cell / 2.0, 0));
            }
            pairwise_sum(&column)
        })
        .collect();
    pairwise_sum(&columns)
}

fn solid_cell(
    region: &SolidRegion,
    x0: &Point3<f64>,
    center: &Point3<f64>,
    half: f64,
    depth: usize,
) -> f64 {
    let diag = 2.0 * half * 3.0f64.sqrt();
    let near = (center - x0).norm() <= 2.0 * diag;
    let split = if near {
        depth < SOLID_NEAR_DEPTH
    } else if depth < SOLID_BOUNDARY_DEPTH {
        // Split cells straddling the region boundary.
        let mut seen_in = false;
        let mut seen_out = false;
        for dx in [-1.0, 1.0] {
            for dy in [-1.0, 1.0] {
                for dz in [-1.0, 1.0] {
                    let corner = Point3::new(
                        center.x + dx * half,
                        center.y + dy * half,
                        center.z + dz * half,
                    );
                    if region.multiplicity(&corner) > 0.0 {
                        seen_in = true;
                    } else {
                        seen_out = true;
                    }
                }
            }
        }
        let center_in = region.multiplicity(center) > 0.0;
        (seen_in && seen_out) || (center_in != seen_in)
    } else {
        false
    };

    if split {
        let quarter = half / 2.0;
        let mut sum = 0.0;
        for dx in [-1.0, 1.0] {
            for dy in [-1.0, 1.0] {
                for dz in [-1.0, 1.0] {
                    let sub = Point3::new(
                        center.x + dx * quarter,
                        center.y + dy * quarter,
                        center.z + dz * quarter,
                    );
                    sum += solid_cell(region, x0, &sub, quarter, depth + 1);
                }
            }
        }
        return sum;
    }

    let theta = region.multiplicity(center);
    if theta == 0.0 {
        return 0.0;
    }
    let d2 = (center - x0).norm_squared();
    if d2 < 1e-28 {
        return 0.0;
    }
    let vol = (2.0 * half).powi(3);
    theta * vol / d2
}
