//! Finite-atom representation of oriented 2-varifolds: push-forward from
//! meshes, ball-restricted measures, density profiles, and a numeric
//! first-variation consistency check.

use nalgebra::{Matrix3, Point3, Vector3};
use thiserror::Error;

use crate::geomcore::{CurvatureField, TriangleImmersion};
use crate::numeric::pairwise_sum;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum VarifoldError {
    #[error("rho {rho} is below the atom resolution {resolution}")]
    RhoBelowResolution { rho: f64, resolution: f64 },
    #[error("curvature field has {field} entries but there are {atoms} atoms")]
    MismatchedFieldLength { field: usize, atoms: usize },
}

/// Weighted oriented point: position, unit normal (the Hodge dual of the
/// tangent plane orientation), and area weight.
#[derive(Debug, Clone, Copy)]
pub struct VarifoldAtom {
    pub position: Point3<f64>,
    pub normal: Vector3<f64>,
    pub weight: f64,
}

/// Finite atom list approximating an oriented 2-varifold.
#[derive(Debug, Clone)]
pub struct OrientedVarifoldAtoms {
    pub atoms: Vec<VarifoldAtom>,
    pub source: String,
}

/// Atom of the singular first-variation part: position, unit direction, and
/// length weight.
#[derive(Debug, Clone, Copy)]
pub struct BoundaryAtom {
    pub position: Point3<f64>,
    pub direction: Vector3<f64>,
    pub weight: f64,
}

#[derive(Debug, Clone, Default)]
pub struct BoundaryAtoms {
    pub atoms: Vec<BoundaryAtom>,
}

impl BoundaryAtoms {
    pub fn new(atoms: Vec<BoundaryAtom>) -> Self {
        debug_assert!(atoms.iter().all(|a| a.weight > 0.0));
        debug_assert!(atoms.iter().all(|a| (a.direction.norm() - 1.0).abs() < 1e-12));
        Self { atoms }
    }

    pub fn total_mass(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        pairwise_sum(&w)
    }
}

/// Quadrature order of the mesh push-forward.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureOrder {
    /// One centroid atom per face.
    Centroid,
    /// Three edge-midpoint atoms per face, each carrying a third of the area.
    EdgeMidpoints,
}

/// Push a mesh forward to varifold atoms: positions are face quadrature
/// nodes, normals the face normals, weights an exact partition of the area.
pub fn quadrature_varifold(mesh: &TriangleImmersion, order: QuadratureOrder) -> OrientedVarifoldAtoms {
    let mut atoms = Vec::with_capacity(match order {
        QuadratureOrder::Centroid => mesh.n_faces(),
        QuadratureOrder::EdgeMidpoints => 3 * mesh.n_faces(),
    });
    for f in 0..mesh.n_faces() {
        let [a, b, c] = mesh.face_points(f);
        let normal = mesh.face_normal(f);
        let area = mesh.face_area(f);
        match order {
            QuadratureOrder::Centroid => atoms.push(VarifoldAtom {
                position: Point3::from((a.coords + b.coords + c.coords) / 3.0),
                normal,
                weight: area,
            }),
            QuadratureOrder::EdgeMidpoints => {
                for (p, q) in [(a, b), (b, c), (c, a)] {
                    atoms.push(VarifoldAtom {
                        position: Point3::from((p.coords + q.coords) / 2.0),
                        normal,
                        weight: area / 3.0,
                    });
                }
            }
        }
    }
    OrientedVarifoldAtoms {
        atoms,
        source: "mesh".to_string(),
    }
}

/// Mean curvature vectors aligned with the atoms of [`quadrature_varifold`],
/// interpolated from the per-vertex field.
pub fn atom_curvature(
    mesh: &TriangleImmersion,
    curvature: &CurvatureField,
    order: QuadratureOrder,
) -> Vec<Vector3<f64>> {
    let mut h = Vec::new();
    for &[a, b, c] in mesh.faces() {
        let (ha, hb, hc) = (
            curvature.h_vec[a],
            curvature.h_vec[b],
            curvature.h_vec[c],
        );
        match order {
            QuadratureOrder::Centroid => h.push((ha + hb + hc) / 3.0),
            QuadratureOrder::EdgeMidpoints => {
                h.push((ha + hb) / 2.0);
                h.push((hb + hc) / 2.0);
                h.push((hc + ha) / 2.0);
            }
        }
    }
    h
}

/// Quadrature atoms with faces near `x0` pre-subdivided so that triangle
/// size stays below a fraction of the distance to `x0` (capped at
/// `depth_cap` levels), plus barycentrically interpolated curvature vectors.
///
/// Near-singular ball integrals need the atom size to shrink with the
/// distance to the center; far faces keep the plain edge-midpoint rule.
pub fn refined_quadrature_near(
    mesh: &TriangleImmersion,
    curvature: &CurvatureField,
    x0: &Point3<f64>,
    depth_cap: usize,
) -> (OrientedVarifoldAtoms, Vec<Vector3<f64>>) {
    let floor = mesh.mean_edge_length() / (1 << depth_cap) as f64;
    let mut atoms = Vec::new();
    let mut h_field = Vec::new();
    for (f, &[ia, ib, ic]) in mesh.faces().iter().enumerate() {
        let corners = [mesh.vertices()[ia], mesh.vertices()[ib], mesh.vertices()[ic]];
        let h_corners = [
            curvature.h_vec[ia],
            curvature.h_vec[ib],
            curvature.h_vec[ic],
        ];
        let normal = mesh.face_normal(f);
        // Barycentric corner coordinates of the current sub-triangle.
        let bary = [
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            Vector3::new(0.0, 0.0, 1.0),
        ];
        refine_face(
            &corners, &h_corners, &normal, bary, x0, floor, depth_cap, &mut atoms, &mut h_field,
        );
    }
    (
        OrientedVarifoldAtoms {
            atoms,
            source: "mesh-refined".to_string(),
        },
        h_field,
    )
}

#[allow(clippy::too_many_arguments)]
fn refine_face(
    corners: &[Point3<f64>; 3],
    h_corners: &[Vector3<f64>; 3],
    normal: &Vector3<f64>,
    bary: [Vector3<f64>; 3],
    x0: &Point3<f64>,
    floor: f64,
    depth_left: usize,
    atoms: &mut Vec<VarifoldAtom>,
    h_field: &mut Vec<Vector3<f64>>,
) {
    let point = |b: &Vector3<f64>| {
        Point3::from(corners[0].coords * b.x + corners[1].coords * b.y + corners[2].coords * b.z)
    };
    let p = [point(&bary[0]), point(&bary[1]), point(&bary[2])];
    let size = (p[0] - p[1])
        .norm()
        .max((p[1] - p[2]).norm())
        .max((p[2] - p[0]).norm());
    let centroid = Point3::from((p[0].coords + p[1].coords + p[2].coords) / 3.0);
    let dist = (centroid - x0).norm();
    let target = (dist / 24.0).max(floor);
    if depth_left > 0 && size > target {
        let m01 = (bary[0] + bary[1]) / 2.0;
        let m12 = (bary[1] + bary[2]) / 2.0;
        let m20 = (bary[2] + bary[0]) / 2.0;
        for child in [
            [bary[0], m01, m20],
            [m01, bary[1], m12],
            [m20, m12, bary[2]],
            [m01, m12, m20],
        ] {
            refine_face(
                corners, h_corners, normal, child, x0, floor, depth_left - 1, atoms, h_field,
            );
        }
        return;
    }
    let area = 0.5 * (p[1] - p[0]).cross(&(p[2] - p[0])).norm();
    let h_at = |b: &Vector3<f64>| h_corners[0] * b.x + h_corners[1] * b.y + h_corners[2] * b.z;
    for (a, b) in [(0usize, 1usize), (1, 2), (2, 0)] {
        let mid = (bary[a] + bary[b]) / 2.0;
        atoms.push(VarifoldAtom {
            position: point(&mid),
            normal: *normal,
            weight: area / 3.0,
        });
        h_field.push(h_at(&mid));
    }
}

impl OrientedVarifoldAtoms {
    pub fn total_weight(&self) -> f64 {
        let w: Vec<f64> = self.atoms.iter().map(|a| a.weight).collect();
        pairwise_sum(&w)
    }

    /// Negate every normal; weights unchanged.
    pub fn reverse_orientation(&self) -> Self {
        Self {
            atoms: self
                .atoms
                .iter()
                .map(|a| VarifoldAtom {
                    position: a.position,
                    normal: -a.normal,
                    weight: a.weight,
                })
                .collect(),
            source: self.source.clone(),
        }
    }

    /// Smallest ball radius the atoms can resolve: three times the edge of
    /// an equilateral triangle with the mean atom weight.
    pub fn resolution(&self) -> f64 {
        let mean_w = self.total_weight() / self.atoms.len() as f64;
        3.0 * (4.0 * mean_w / 3.0f64.sqrt()).sqrt()
    }

    /// CSV dump with columns x,y,z,nx,ny,nz,w.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("x,y,z,nx,ny,nz,w\n");
        for a in &self.atoms {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                a.position.x, a.position.y, a.position.z, a.normal.x, a.normal.y, a.normal.z, a.weight
            ));
        }
        out
    }
}

/// Atom distances to a center, sorted once with prefix weights, so any
/// number of ball queries costs one sort.
pub struct BallProfile {
    dists: Vec<f64>,
    prefix: Vec<f64>,
}

impl BallProfile {
    pub fn new(varifold: &OrientedVarifoldAtoms, x0: &Point3<f64>) -> Self {
        let mut pairs: Vec<(f64, f64)> = varifold
            .atoms
            .iter()
            .map(|a| ((a.position - x0).norm(), a.weight))
            .collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        let dists = pairs.iter().map(|p| p.0).collect();
        let mut prefix = Vec::with_capacity(pairs.len() + 1);
        let mut acc = 0.0;
        prefix.push(0.0);
        for &(_, w) in &pairs {
            acc += w;
            prefix.push(acc);
        }
        Self { dists, prefix }
    }

    /// Total weight of atoms with distance <= rho.
    pub fn weight_within(&self, rho: f64) -> f64 {
        let k = self.dists.partition_point(|&d| d <= rho);
        self.prefix[k]
    }
}

/// Weight of the varifold restricted to the closed ball B(x0, rho).
pub fn weight_in_ball(varifold: &OrientedVarifoldAtoms, x0: &Point3<f64>, rho: f64) -> f64 {
    assert!(rho > 0.0, "rho must be positive");
    BallProfile::new(varifold, x0).weight_within(rho)
}

/// Density ratios mu(B_rho)/(pi rho^2); the small-rho plateau estimates the
/// 2-density at x0.
pub fn density_profile(
    varifold: &OrientedVarifoldAtoms,
    x0: &Point3<f64>,
    rhos: &[f64],
) -> Result<Vec<(f64, f64)>, VarifoldError> {
    let resolution = varifold.resolution();
    if let Some(&bad) = rhos.iter().find(|&&rho| rho < resolution) {
        return Err(VarifoldError::RhoBelowResolution {
            rho: bad,
            resolution,
        });
    }
    let profile = BallProfile::new(varifold, x0);
    Ok(rhos
        .iter()
        .map(|&rho| {
            (
                rho,
                profile.weight_within(rho) / (std::f64::consts::PI * rho * rho),
            )
        })
        .collect())
}

/// Smooth test vector field with an analytic Jacobian.
#[derive(Debug, Clone, Copy)]
pub enum TestField {
    Constant(Vector3<f64>),
    /// X(x) = A x + b.
    Linear(Matrix3<f64>, Vector3<f64>),
}

impl TestField {
    pub fn eval(&self, x: &Point3<f64>) -> Vector3<f64> {
        match self {
            TestField::Constant(v) => *v,
            TestField::Linear(a, b) => a * x.coords + b,
        }
    }

    pub fn jacobian(&self, _x: &Point3<f64>) -> Matrix3<f64> {
        match self {
            TestField::Constant(_) => Matrix3::zeros(),
            TestField::Linear(a, _) => *a,
        }
    }
}

/// Largest normalized defect of the first-variation identity
/// `sum w div_T X + sum w <X, H> = 0` over the test fields.
///
/// The tangential divergence projects the analytic Jacobian onto the atom
/// plane. The defect is normalized by `sum w |X||H| + |sum w div_T X|`, so a
/// zero curvature field against a stretching test field reads as residual 1.
pub fn first_variation_residual(
    varifold: &OrientedVarifoldAtoms,
    h_field: &[Vector3<f64>],
    test_fields: &[TestField],
) -> Result<f64, VarifoldError> {
    if h_field.len() != varifold.atoms.len() {
        return Err(VarifoldError::MismatchedFieldLength {
            field: h_field.len(),
            atoms: varifold.atoms.len(),
        });
    }
    let mut worst = 0.0f64;
    for field in test_fields {
        let div_terms: Vec<f64> = varifold
            .atoms
            .iter()
            .map(|a| {
                let jac = field.jacobian(&a.position);
                let n = a.normal;
                a.weight * (jac.trace() - (n.transpose() * jac * n)[(0, 0)])
            })
            .collect();
        let pair_terms: Vec<f64> = varifold
            .atoms
            .iter()
            .zip(h_field)
            .map(|(a, h)| a.weight * field.eval(&a.position).dot(h))
            .collect();
        let scale_terms: Vec<f64> = varifold
            .atoms
            .iter()
            .zip(h_field)
            .map(|(a, h)| a.weight * field.eval(&a.position).norm() * h.norm())
            .collect();
        let first_variation = pairwise_sum(&div_terms);
        let defect = (first_variation + pairwise_sum(&pair_terms)).abs();
        let denom = pairwise_sum(&scale_terms) + first_variation.abs() + 1e-30;
        worst = worst.max(defect / denom);
    }
    Ok(worst)
}

#[cfg(test)]
mod tests;
