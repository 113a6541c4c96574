//! Oriented triangle immersions of closed surfaces and their discrete
//! differential-geometric primitives.
//!
//! Meshes are validated on construction (closed, consistently oriented, no
//! degenerate faces) and immutable afterwards. The orientation convention is
//! the inner normal: face windings are chosen so that an embedded sphere has
//! positive algebraic volume and positive scalar mean curvature `2/r`.

pub mod io;

use nalgebra::{Point3, Vector3};
use thiserror::Error;

use crate::numeric::{pairwise_sum, par_sum_indexed};

/// Cotangent weights larger than this indicate a sliver triangle.
pub const COTAN_CAP: f64 = 1e8;
/// Relative face-area threshold below which a face counts as degenerate.
pub const DEGENERATE_FACE_REL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("edge ({v0}, {v1}) is shared by {count} face sides (face {face}); surface is not closed 2-manifold")]
    NonManifoldEdge {
        v0: usize,
        v1: usize,
        face: usize,
        count: usize,
    },
    #[error("faces {face_a} and {face_b} traverse edge ({v0}, {v1}) in the same direction; windings are inconsistent")]
    InconsistentOrientation {
        v0: usize,
        v1: usize,
        face_a: usize,
        face_b: usize,
    },
    #[error("face {face} is degenerate (area {area:.3e} below {threshold:.3e})")]
    DegenerateFace {
        face: usize,
        area: f64,
        threshold: f64,
    },
    #[error("cotangent weight {value:.3e} on face {face} exceeds cap {COTAN_CAP:.0e}; sliver triangle")]
    NumericalDegeneracy { face: usize, value: f64 },
    #[error("scale must be positive, got {0}")]
    NonPositiveScale(f64),
    #[error("face {face} references vertex {index} but there are only {n_vertices} vertices")]
    IndexOutOfRange {
        face: usize,
        index: usize,
        n_vertices: usize,
    },
    #[error("mesh must have at least one vertex and one face")]
    Empty,
}

/// Closed, consistently oriented triangle mesh immersed in 3-space.
///
/// Self-contact and multiple components are allowed; open surfaces and
/// inconsistent windings are rejected at construction.
#[derive(Debug, Clone)]
pub struct TriangleImmersion {
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
    /// Neighbor face across edge `(v[k], v[k+1])` of each face.
    face_adjacency: Vec<[usize; 3]>,
    vertex_faces: Vec<Vec<usize>>,
    mean_edge: f64,
}

/// Validate vertex/face lists and assemble the adjacency structure.
pub fn build_immersion(
    vertices: Vec<Point3<f64>>,
    faces: Vec<[usize; 3]>,
) -> Result<TriangleImmersion, GeomError> {
    TriangleImmersion::build(vertices, faces)
}

impl TriangleImmersion {
    pub fn build(
        vertices: Vec<Point3<f64>>,
        faces: Vec<[usize; 3]>,
    ) -> Result<Self, GeomError> {
        if vertices.is_empty() || faces.is_empty() {
            return Err(GeomError::Empty);
        }
        for (f, tri) in faces.iter().enumerate() {
            for &i in tri {
                if i >= vertices.len() {
                    return Err(GeomError::IndexOutOfRange {
                        face: f,
                        index: i,
                        n_vertices: vertices.len(),
                    });
                }
            }
        }

        let areas: Vec<f64> = faces
            .iter()
            .map(|&[a, b, c]| triangle_area(&vertices[a], &vertices[b], &vertices[c]))
            .collect();
        let mean_area = pairwise_sum(&areas) / areas.len() as f64;
        let threshold = DEGENERATE_FACE_REL * mean_area;
        for (f, &area) in areas.iter().enumerate() {
            if area <= threshold {
                return Err(GeomError::DegenerateFace {
                    face: f,
                    area,
                    threshold,
                });
            }
        }

        // Each directed edge must appear exactly once; its reverse pairs it
        // with the neighbor face. Closed + consistent orientation.
        use std::collections::HashMap;
        let mut directed: HashMap<(usize, usize), usize> = HashMap::with_capacity(faces.len() * 3);
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                if let Some(&other) = directed.get(&e) {
                    // Same directed edge twice: either >2 sides on the
                    // undirected edge or two faces agreeing in direction.
                    let reversed = directed.contains_key(&(e.1, e.0));
                    if reversed {
                        return Err(GeomError::NonManifoldEdge {
                            v0: e.0,
                            v1: e.1,
                            face: f,
                            count: 3,
                        });
                    }
                    return Err(GeomError::InconsistentOrientation {
                        v0: e.0,
                        v1: e.1,
                        face_a: other,
                        face_b: f,
                    });
                }
                directed.insert(e, f);
            }
        }
        let mut face_adjacency = vec![[usize::MAX; 3]; faces.len()];
        for (f, tri) in faces.iter().enumerate() {
            for k in 0..3 {
                let e = (tri[k], tri[(k + 1) % 3]);
                match directed.get(&(e.1, e.0)) {
                    Some(&g) => face_adjacency[f][k] = g,
                    None => {
                        return Err(GeomError::NonManifoldEdge {
                            v0: e.0,
                            v1: e.1,
                            face: f,
                            count: 1,
                        })
                    }
                }
            }
        }

        let mut vertex_faces = vec![Vec::new(); vertices.len()];
        for (f, tri) in faces.iter().enumerate() {
            for &v in tri {
                vertex_faces[v].push(f);
            }
        }

        let mut edge_len_sum = 0.0;
        let mut edge_count = 0usize;
        for tri in &faces {
            for k in 0..3 {
                let (i, j) = (tri[k], tri[(k + 1) % 3]);
                if i < j {
                    edge_len_sum += (vertices[i] - vertices[j]).norm();
                    edge_count += 1;
                }
            }
        }
        // Every undirected edge appears once with i<j and once reversed.
        let mean_edge = edge_len_sum / edge_count as f64;

        Ok(Self {
            vertices,
            faces,
            face_adjacency,
            vertex_faces,
            mean_edge,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn n_vertices(&self) -> usize {
        self.vertices.len()
    }

    pub fn n_faces(&self) -> usize {
        self.faces.len()
    }

    /// Neighbor face across edge `(v[k], v[k+1])` of face `f`.
    pub fn face_neighbor(&self, f: usize, k: usize) -> usize {
        self.face_adjacency[f][k]
    }

    pub fn vertex_faces(&self, v: usize) -> &[usize] {
        &self.vertex_faces[v]
    }

    pub fn mean_edge_length(&self) -> f64 {
        self.mean_edge
    }

    pub fn face_points(&self, f: usize) -> [Point3<f64>; 3] {
        let [a, b, c] = self.faces[f];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    pub fn face_area(&self, f: usize) -> f64 {
        let [a, b, c] = self.face_points(f);
        triangle_area(&a, &b, &c)
    }

    /// Unit normal induced by the face winding (inner normal by convention).
    pub fn face_normal(&self, f: usize) -> Vector3<f64> {
        let [a, b, c] = self.face_points(f);
        (b - a).cross(&(c - a)).normalize()
    }

    pub fn face_centroid(&self, f: usize) -> Point3<f64> {
        let [a, b, c] = self.face_points(f);
        Point3::from((a.coords + b.coords + c.coords) / 3.0)
    }

    /// Total surface area.
    pub fn total_area(&self) -> f64 {
        par_sum_indexed(self.faces.len(), |f| self.face_area(f))
    }

    /// Algebraic volume `-(1/3) sum <centroid, n> area`; positive for embedded
    /// surfaces carrying the inner normal.
    pub fn algebraic_volume(&self) -> f64 {
        par_sum_indexed(self.faces.len(), |f| {
            let [a, b, c] = self.face_points(f);
            let n = (b - a).cross(&(c - a));
            let centroid = (a.coords + b.coords + c.coords) / 3.0;
            -centroid.dot(&n) / 6.0
        })
    }

    /// Exact maximum pairwise vertex distance.
    ///
    /// Brute force with a radius prune: a pair can only exceed the current
    /// best if both members lie far enough from the centroid.
    pub fn diameter(&self) -> f64 {
        let n = self.vertices.len();
        let centroid = Point3::from(
            self.vertices
                .iter()
                .fold(Vector3::zeros(), |acc, p| acc + p.coords)
                / n as f64,
        );
        let radii: Vec<f64> = self.vertices.iter().map(|p| (p - centroid).norm()).collect();
        let p0 = (0..n).max_by(|&i, &j| radii[i].total_cmp(&radii[j])).unwrap();
        let far = |s: usize| {
            (0..n)
                .max_by(|&i, &j| {
                    let di = (self.vertices[i] - self.vertices[s]).norm_squared();
                    let dj = (self.vertices[j] - self.vertices[s]).norm_squared();
                    di.total_cmp(&dj)
                })
                .unwrap()
        };
        let p1 = far(p0);
        let p2 = far(p1);
        let mut best = (self.vertices[p1] - self.vertices[p2])
            .norm()
            .max((self.vertices[p0] - self.vertices[p1]).norm());
        let r_max = radii[p0];
        let mut candidates: Vec<usize> =
            (0..n).filter(|&i| radii[i] + r_max >= best).collect();
        candidates.sort_by(|&i, &j| radii[j].total_cmp(&radii[i]));
        for (s, &i) in candidates.iter().enumerate() {
            if radii[i] + r_max < best {
                break;
            }
            for &j in &candidates[s + 1..] {
                if radii[i] + radii[j] < best {
                    break;
                }
                let d = (self.vertices[i] - self.vertices[j]).norm();
                if d > best {
                    best = d;
                }
            }
        }
        best
    }

    /// Similarity transform `x -> scale*x + translation`; faces unchanged.
    pub fn transform(
        &self,
        scale: f64,
        translation: Vector3<f64>,
    ) -> Result<Self, GeomError> {
        if scale <= 0.0 {
            return Err(GeomError::NonPositiveScale(scale));
        }
        Ok(Self {
            vertices: self
                .vertices
                .iter()
                .map(|p| Point3::from(p.coords * scale + translation))
                .collect(),
            faces: self.faces.clone(),
            face_adjacency: self.face_adjacency.clone(),
            vertex_faces: self.vertex_faces.clone(),
            mean_edge: self.mean_edge * scale,
        })
    }

    /// Mesh with all face windings reversed (normals flipped).
    pub fn reversed(&self) -> Self {
        let faces: Vec<[usize; 3]> = self.faces.iter().map(|&[a, b, c]| [a, c, b]).collect();
        Self::build(self.vertices.clone(), faces).expect("reversal preserves validity")
    }

    /// Component id per face under edge adjacency.
    pub fn face_components(&self) -> Vec<usize> {
        let mut uf = UnionFind::new(self.faces.len());
        for f in 0..self.faces.len() {
            for k in 0..3 {
                uf.union(f, self.face_adjacency[f][k]);
            }
        }
        uf.compact_labels()
    }

    pub fn n_components(&self) -> usize {
        self.face_components().iter().max().map_or(0, |m| m + 1)
    }

    /// Number of adjacency-connected clusters among faces closer than `eps`
    /// to `x0`; the discrete sheet count at a point.
    pub fn multiplicity_at(&self, x0: &Point3<f64>, eps: f64) -> usize {
        assert!(eps > 0.0, "eps must be positive");
        let near: Vec<bool> = (0..self.faces.len())
            .map(|f| {
                let [a, b, c] = self.face_points(f);
                point_triangle_distance(x0, &a, &b, &c) < eps
            })
            .collect();
        let mut uf = UnionFind::new(self.faces.len());
        for f in 0..self.faces.len() {
            if !near[f] {
                continue;
            }
            for k in 0..3 {
                let g = self.face_adjacency[f][k];
                if near[g] {
                    uf.union(f, g);
                }
            }
        }
        let mut roots = std::collections::HashSet::new();
        for (f, &is_near) in near.iter().enumerate() {
            if is_near {
                roots.insert(uf.find(f));
            }
        }
        roots.len()
    }

    /// Default clustering radius for multiplicity counting.
    pub fn default_multiplicity_eps(&self) -> f64 {
        2.0 * self.mean_edge
    }

    /// Area-weighted vertex normals (inner orientation).
    pub fn vertex_normals(&self) -> Vec<Vector3<f64>> {
        let mut accum = vec![Vector3::zeros(); self.vertices.len()];
        for &[a, b, c] in &self.faces {
            let area_vec =
                (self.vertices[b] - self.vertices[a]).cross(&(self.vertices[c] - self.vertices[a]));
            for &v in &[a, b, c] {
                accum[v] += area_vec;
            }
        }
        accum.iter().map(|n| n.normalize()).collect()
    }

    /// Discrete mean curvature via the cotangent formula with barycentric
    /// vertex areas.
    pub fn mean_curvature(&self) -> Result<CurvatureField, GeomError> {
        let nv = self.vertices.len();
        let mut accum = vec![Vector3::zeros(); nv];
        let mut vertex_area = vec![0.0f64; nv];
        let mut normal_accum = vec![Vector3::zeros(); nv];

        for (f, &[a, b, c]) in self.faces.iter().enumerate() {
            let (pa, pb, pc) = (self.vertices[a], self.vertices[b], self.vertices[c]);
            let area = triangle_area(&pa, &pb, &pc);
            let area_vec = (pb - pa).cross(&(pc - pa));
            for &v in &[a, b, c] {
                vertex_area[v] += area / 3.0;
                normal_accum[v] += area_vec;
            }
            // Corner cotangent at ip weights the opposite edge (iq, ir).
            for &(ip, iq, ir) in &[(a, b, c), (b, c, a), (c, a, b)] {
                let u = self.vertices[iq] - self.vertices[ip];
                let v = self.vertices[ir] - self.vertices[ip];
                let cot = u.dot(&v) / u.cross(&v).norm();
                if cot.abs() > COTAN_CAP {
                    return Err(GeomError::NumericalDegeneracy { face: f, value: cot });
                }
                let pull = self.vertices[ir] - self.vertices[iq];
                accum[iq] += cot * pull;
                accum[ir] -= cot * pull;
            }
        }

        let h_vec: Vec<Vector3<f64>> = accum
            .iter()
            .zip(&vertex_area)
            .map(|(s, &a)| s / (2.0 * a))
            .collect();
        let h_scalar: Vec<f64> = h_vec
            .iter()
            .zip(&normal_accum)
            .map(|(h, n)| h.dot(&n.normalize()))
            .collect();
        let vertex_normal: Vec<Vector3<f64>> =
            normal_accum.iter().map(|n| n.normalize()).collect();

        Ok(CurvatureField {
            h_vec,
            h_scalar,
            vertex_area,
            vertex_normal,
        })
    }
}

/// Per-vertex mean curvature data.
///
/// `h_vec` is the discrete Laplace-Beltrami of the position field (the mean
/// curvature vector, orientation-independent); `h_scalar` pairs it with the
/// oriented vertex normal, so it is `+2/r` on an inner-normal sphere and
/// flips sign under orientation reversal.
#[derive(Debug, Clone)]
pub struct CurvatureField {
    pub h_vec: Vec<Vector3<f64>>,
    pub h_scalar: Vec<f64>,
    pub vertex_area: Vec<f64>,
    pub vertex_normal: Vec<Vector3<f64>>,
}

pub fn triangle_area(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> f64 {
    0.5 * (b - a).cross(&(c - a)).norm()
}

/// Euclidean distance from `p` to the closed triangle `abc`.
pub fn point_triangle_distance(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> f64 {
    (p - closest_point_on_triangle(p, a, b, c)).norm()
}

/// Closest point on triangle `abc` to `p` (Ericson's region test).
pub fn closest_point_on_triangle(
    p: &Point3<f64>,
    a: &Point3<f64>,
    b: &Point3<f64>,
    c: &Point3<f64>,
) -> Point3<f64> {
    let ab = b - a;
    let ac = c - a;
    let ap = p - a;
    let d1 = ab.dot(&ap);
    let d2 = ac.dot(&ap);
    if d1 <= 0.0 && d2 <= 0.0 {
        return *a;
    }
    let bp = p - b;
    let d3 = ab.dot(&bp);
    let d4 = ac.dot(&bp);
    if d3 >= 0.0 && d4 <= d3 {
        return *b;
    }
    let vc = d1 * d4 - d3 * d2;
    if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
        let v = d1 / (d1 - d3);
        return Point3::from(a.coords + ab * v);
    }
    let cp = p - c;
    let d5 = ab.dot(&cp);
    let d6 = ac.dot(&cp);
    if d6 >= 0.0 && d5 <= d6 {
        return *c;
    }
    let vb = d5 * d2 - d1 * d6;
    if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
        let w = d2 / (d2 - d6);
        return Point3::from(a.coords + ac * w);
    }
    let va = d3 * d6 - d5 * d4;
    if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
        let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
        return Point3::from(b.coords + (c - b) * w);
    }
    let denom = 1.0 / (va + vb + vc);
    let v = vb * denom;
    let w = vc * denom;
    Point3::from(a.coords + ab * v + ac * w)
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        Self {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            self.parent[ra] = rb;
        }
    }

    fn compact_labels(&mut self) -> Vec<usize> {
        let mut label = std::collections::HashMap::new();
        (0..self.parent.len())
            .map(|i| {
                let r = self.find(i);
                let next = label.len();
                *label.entry(r).or_insert(next)
            })
            .collect()
    }
}
