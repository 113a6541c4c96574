//! Li-Yau multiplicity bounds and the inequalities derived from them:
//! the ball-monotonicity profile, embeddedness certificates, diameter
//! bounds, the 4-pi lower energy bound, the explicit energy threshold, the
//! singular boundary term, and the Minkowski-type criterion.

use nalgebra::Point3;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::concvol::{self, ConcVolError};
use crate::functionals;
use crate::geomcore::{GeomError, TriangleImmersion};
use crate::numeric::pairwise_sum;
use crate::varifold::{self, BoundaryAtoms, QuadratureOrder};

/// Discretization slack absorbed by the multiplicity verdict.
pub const MULTIPLICITY_SLACK: f64 = 0.05;

#[derive(Debug, Error)]
pub enum LiYauError {
    #[error("x0 lies within 1e-9 of a boundary atom")]
    PointOnBoundary,
    #[error("spontaneous curvature must satisfy c0 <= 0, got {0}")]
    PositiveC0(f64),
    #[error("spontaneous curvature must satisfy c0 < 0, got {0}")]
    NonNegativeC0(f64),
    #[error("Helfrich energy is numerically zero; bound undefined")]
    ZeroEnergy,
    #[error("targets violate the isoperimetric inequality: 36 pi V0^2 = {lhs:.6e} > A0^3 = {rhs:.6e}")]
    IsoperimetricViolation { lhs: f64, rhs: f64 },
    #[error("rho {rho} is below the resolvable radius {resolution}")]
    RhoBelowResolution { rho: f64, resolution: f64 },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    ConcVol(#[from] ConcVolError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Consistent,
    Violated,
}

/// Components of the Li-Yau bound; the fixed zero density at infinity is
/// reported explicitly.
#[derive(Debug, Clone, Serialize)]
pub struct BoundComponents {
    pub density_at_infinity: f64,
    pub helfrich_over_4pi: f64,
    pub cvol_term: f64,
    pub boundary_term: f64,
}

/// Multiplicity bound at a point with its components and the measured
/// discrete sheet count.
#[derive(Debug, Clone, Serialize)]
pub struct LiYauCertificate {
    pub x0: [f64; 3],
    pub components: BoundComponents,
    pub bound: f64,
    pub multiplicity_bound: i64,
    pub measured: usize,
    pub verdict: Verdict,
}

/// Multiplicity bound `theta_inf + H_c0/(4 pi) + (c0/(2 pi)) Vc(x0)` from
/// the smooth-immersion inequality.
pub fn liyau_bound(
    mesh: &TriangleImmersion,
    c0: f64,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<LiYauCertificate, LiYauError> {
    liyau_certificate(mesh, None, c0, x0, tol)
}

/// Li-Yau bound including the compact-support boundary term of a singular
/// first-variation part.
pub fn liyau_bound_with_boundary(
    mesh: &TriangleImmersion,
    beta: &BoundaryAtoms,
    c0: f64,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<LiYauCertificate, LiYauError> {
    liyau_certificate(mesh, Some(beta), c0, x0, tol)
}

fn liyau_certificate(
    mesh: &TriangleImmersion,
    beta: Option<&BoundaryAtoms>,
    c0: f64,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<LiYauCertificate, LiYauError> {
    let curvature = mesh.mean_curvature()?;
    let energy = functionals::helfrich_energy(&curvature, c0);
    let cvol = concvol::concentrated_volume(mesh, x0, tol)?.value;
    let boundary = match beta {
        Some(beta) => boundary_term(beta, x0)?,
        None => 0.0,
    };
    let components = BoundComponents {
        density_at_infinity: 0.0,
        helfrich_over_4pi: energy / (4.0 * std::f64::consts::PI),
        cvol_term: c0 / (2.0 * std::f64::consts::PI) * cvol,
        boundary_term: boundary,
    };
    let bound = components.density_at_infinity
        + components.helfrich_over_4pi
        + components.cvol_term
        + components.boundary_term;
    let measured = mesh.multiplicity_at(x0, mesh.default_multiplicity_eps());
    Ok(LiYauCertificate {
        x0: [x0.x, x0.y, x0.z],
        components,
        bound,
        multiplicity_bound: (bound + MULTIPLICITY_SLACK).floor() as i64,
        measured,
        verdict: if measured as f64 > bound + MULTIPLICITY_SLACK {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
    })
}

/// Compact-support boundary term
/// `(1/(2 pi)) int <x - x0, eta>/|x - x0|^2 d beta`.
pub fn boundary_term(beta: &BoundaryAtoms, x0: &Point3<f64>) -> Result<f64, LiYauError> {
    let terms: Vec<f64> = beta
        .atoms
        .iter()
        .map(|a| {
            let d = a.position - x0;
            let d2 = d.norm_squared();
            if d2 < 1e-18 {
                f64::NAN
            } else {
                a.weight * d.dot(&a.direction) / d2
            }
        })
        .collect();
    if terms.iter().any(|t| t.is_nan()) {
        return Err(LiYauError::PointOnBoundary);
    }
    Ok(pairwise_sum(&terms) / (2.0 * std::f64::consts::PI))
}

/// Scale-invariant bound from the CMC deficit, with the optimal-c0
/// consistency residual.
#[derive(Debug, Clone, Serialize)]
pub struct ScaleInvariantCertificate {
    pub x0: [f64; 3],
    pub deficit_over_4pi: f64,
    pub curvature_cvol_term: f64,
    pub cvol_square_term: f64,
    pub bound: f64,
    pub optimal_c0: f64,
    pub optimal_c0_residual: f64,
    pub measured: usize,
    pub verdict: Verdict,
}

/// Bound `deficit/(4 pi) + Hbar Vc/(2 pi) - Vc^2/(pi A)`, invariant under
/// rescaling and orientation reversal.
///
/// Also evaluates the quadratic-in-c0 bound at its minimizer
/// `c0* = (int H_sc - 4 Vc)/A` and reports the difference as a consistency
/// residual.
pub fn scale_invariant_bound(
    mesh: &TriangleImmersion,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<ScaleInvariantCertificate, LiYauError> {
    let pi = std::f64::consts::PI;
    let curvature = mesh.mean_curvature()?;
    let area = mesh.total_area();
    let (deficit, mean_h) = functionals::cmc_deficit(&curvature);
    let cvol = concvol::concentrated_volume(mesh, x0, tol)?.value;
    let bound = deficit / (4.0 * pi) + mean_h * cvol / (2.0 * pi) - cvol * cvol / (pi * area);

    let total_h = mean_h * area;
    let optimal_c0 = (total_h - 4.0 * cvol) / area;
    let quadratic_at = |c0: f64| {
        functionals::helfrich_energy(&curvature, c0) / (4.0 * pi) + c0 / (2.0 * pi) * cvol
    };
    let residual = (quadratic_at(optimal_c0) - bound).abs();

    let measured = mesh.multiplicity_at(x0, mesh.default_multiplicity_eps());
    Ok(ScaleInvariantCertificate {
        x0: [x0.x, x0.y, x0.z],
        deficit_over_4pi: deficit / (4.0 * pi),
        curvature_cvol_term: mean_h * cvol / (2.0 * pi),
        cvol_square_term: -cvol * cvol / (pi * area),
        bound,
        optimal_c0,
        optimal_c0_residual: residual,
        measured,
        verdict: if measured as f64 > bound + MULTIPLICITY_SLACK {
            Verdict::Violated
        } else {
            Verdict::Consistent
        },
    })
}

/// One radius of the monotonicity profile with its five terms.
#[derive(Debug, Clone, Serialize)]
pub struct ProfileRow {
    pub rho: f64,
    pub gamma: f64,
    /// mu(B_rho)/rho^2
    pub term1: f64,
    /// (1/16) int_{B_rho} |H - c0 n|^2
    pub term2: f64,
    /// -(c0/2) int_{B_rho} <x-x0, n>/|x-x0|^2
    pub term3: f64,
    /// (1/(2 rho^2)) int_{B_rho} <x-x0, H - c0 n>
    pub term4: f64,
    /// (c0/(2 rho^2)) int_{B_rho} <x-x0, n>
    pub term5: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct MonotonicityProfile {
    pub rows: Vec<ProfileRow>,
}

impl MonotonicityProfile {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("rho,gamma,term1,term2,term3,term4,term5\n");
        for r in &self.rows {
            out.push_str(&format!(
                "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
                r.rho, r.gamma, r.term1, r.term2, r.term3, r.term4, r.term5
            ));
        }
        out
    }
}

const PROFILE_REFINE_DEPTH: usize = 6;

/// Ball-monotonicity function gamma(rho), nondecreasing in rho, evaluated
/// over a quadrature varifold refined near `x0`.
pub fn monotonicity_profile(
    mesh: &TriangleImmersion,
    c0: f64,
    x0: &Point3<f64>,
    rhos: &[f64],
) -> Result<MonotonicityProfile, LiYauError> {
    assert!(rhos.windows(2).all(|w| w[0] < w[1]), "rhos must be ascending");
    let resolution = 3.0 * mesh.mean_edge_length() / (1 << PROFILE_REFINE_DEPTH) as f64;
    if let Some(&bad) = rhos.iter().find(|&&rho| rho < resolution) {
        return Err(LiYauError::RhoBelowResolution {
            rho: bad,
            resolution,
        });
    }
    let curvature = mesh.mean_curvature()?;
    let (atoms, h_field) = varifold::refined_quadrature_near(mesh, &curvature, x0, PROFILE_REFINE_DEPTH);

    // Per-atom integrands, sorted by distance, prefix-summed once.
    struct Row {
        dist: f64,
        weight: f64,
        energy: f64,
        cvol: f64,
        radial_h: f64,
        radial_n: f64,
    }
    let mut rows: Vec<Row> = atoms
        .atoms
        .iter()
        .zip(&h_field)
        .map(|(a, h)| {
            let d = a.position - x0;
            let dist = d.norm();
            let hc = h - c0 * a.normal;
            Row {
                dist,
                weight: a.weight,
                energy: a.weight * hc.norm_squared() / 16.0,
                cvol: if dist > 1e-14 {
                    a.weight * d.dot(&a.normal) / (dist * dist)
                } else {
                    0.0
                },
                radial_h: a.weight * d.dot(&hc),
                radial_n: a.weight * d.dot(&a.normal),
            }
        })
        .collect();
    rows.sort_by(|a, b| a.dist.total_cmp(&b.dist));
    let mut prefix = vec![[0.0f64; 5]];
    for r in &rows {
        let last = *prefix.last().unwrap();
        prefix.push([
            last[0] + r.weight,
            last[1] + r.energy,
            last[2] + r.cvol,
            last[3] + r.radial_h,
            last[4] + r.radial_n,
        ]);
    }
    let dists: Vec<f64> = rows.iter().map(|r| r.dist).collect();

    let out = rhos
        .iter()
        .map(|&rho| {
            let k = dists.partition_point(|&d| d <= rho);
            let [w, e, cv, rh, rn] = prefix[k];
            let term1 = w / (rho * rho);
            let term2 = e;
            let term3 = -(c0 / 2.0) * cv;
            let term4 = rh / (2.0 * rho * rho);
            let term5 = c0 * rn / (2.0 * rho * rho);
            ProfileRow {
                rho,
                gamma: term1 + term2 + term3 + term4 + term5,
                term1,
                term2,
                term3,
                term4,
                term5,
            }
        })
        .collect();
    Ok(MonotonicityProfile { rows: out })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddednessVerdict {
    EmbeddedCertified,
    Inconclusive,
    Violated,
}

#[derive(Debug, Clone, Serialize)]
pub struct EmbeddednessCertificate {
    pub verdict: EmbeddednessVerdict,
    pub energy: f64,
    pub threshold: f64,
    pub worst_multiplicity: usize,
    pub worst_x0: [f64; 3],
}

/// Embeddedness certificate for `c0 <= 0`: granted when the Helfrich energy
/// sits below `8 pi (1 - tol)` and no probe point shows multiplicity above
/// one. Probes are the 64 vertices of highest local density.
pub fn embeddedness_certificate(
    mesh: &TriangleImmersion,
    c0: f64,
    tol: f64,
) -> Result<EmbeddednessCertificate, LiYauError> {
    if c0 > 0.0 {
        return Err(LiYauError::PositiveC0(c0));
    }
    let curvature = mesh.mean_curvature()?;
    let energy = functionals::helfrich_energy(&curvature, c0);
    let threshold = 8.0 * std::f64::consts::PI * (1.0 - tol);

    let probes = density_ranked_vertices(mesh, 64);
    let eps = mesh.default_multiplicity_eps();
    let counts: Vec<(usize, usize)> = probes
        .par_iter()
        .map(|&v| (v, mesh.multiplicity_at(&mesh.vertices()[v], eps)))
        .collect();
    let &(worst_v, worst_m) = counts
        .iter()
        .max_by_key(|&&(_, m)| m)
        .expect("at least one probe");
    let worst = mesh.vertices()[worst_v];

    let verdict = if energy < threshold && worst_m <= 1 {
        EmbeddednessVerdict::EmbeddedCertified
    } else if energy < threshold {
        // Bound certifies embeddedness but the mesh shows a collision.
        EmbeddednessVerdict::Violated
    } else {
        EmbeddednessVerdict::Inconclusive
    };
    Ok(EmbeddednessCertificate {
        verdict,
        energy,
        threshold,
        worst_multiplicity: worst_m,
        worst_x0: [worst.x, worst.y, worst.z],
    })
}

/// Vertices ranked by local area density inside a ball of a few edge
/// lengths, highest first.
pub fn density_ranked_vertices(mesh: &TriangleImmersion, count: usize) -> Vec<usize> {
    let radius = 3.0 * mesh.mean_edge_length();
    let atoms = varifold::quadrature_varifold(mesh, QuadratureOrder::Centroid);
    // Uniform grid over atom positions.
    let cell = radius;
    let key = |p: &Point3<f64>| {
        (
            (p.x / cell).floor() as i64,
            (p.y / cell).floor() as i64,
            (p.z / cell).floor() as i64,
        )
    };
    let mut grid: std::collections::HashMap<(i64, i64, i64), Vec<usize>> =
        std::collections::HashMap::new();
    for (i, a) in atoms.atoms.iter().enumerate() {
        grid.entry(key(&a.position)).or_default().push(i);
    }
    let density = |p: &Point3<f64>| -> f64 {
        let (kx, ky, kz) = key(p);
        let mut sum = 0.0;
        for dx in -1..=1 {
            for dy in -1..=1 {
                for dz in -1..=1 {
                    if let Some(bucket) = grid.get(&(kx + dx, ky + dy, kz + dz)) {
                        for &i in bucket {
                            let a = &atoms.atoms[i];
                            if (a.position - p).norm() <= radius {
                                sum += a.weight;
                            }
                        }
                    }
                }
            }
        }
        sum
    };
    let mut scored: Vec<(usize, f64)> = (0..mesh.n_vertices())
        .into_par_iter()
        .map(|v| (v, density(&mesh.vertices()[v])))
        .collect();
    scored.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    scored.truncate(count);
    scored.into_iter().map(|(v, _)| v).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct DiameterBounds {
    pub lower: f64,
    pub upper: Option<f64>,
    pub measured: f64,
    pub lower_ok: bool,
    pub upper_ok: bool,
}

/// Diameter sandwich: `|2A - 3 c0 V| / (2 sqrt(A H_c0)) <= diam` always, and
/// `diam <= (9/(2 pi)) sqrt(H_c0 (A + (2/3)|c0| V))` for `c0 <= 0` with
/// positive volume. Violations beyond 2 percent slack are flagged.
pub fn diameter_bounds(mesh: &TriangleImmersion, c0: f64) -> Result<DiameterBounds, LiYauError> {
    let curvature = mesh.mean_curvature()?;
    let energy = functionals::helfrich_energy(&curvature, c0);
    // A discrete CMC surface at its matching c0 carries only quadrature
    // noise; treat anything at that level as zero energy.
    if energy <= 1e-3 {
        return Err(LiYauError::ZeroEnergy);
    }
    let area = mesh.total_area();
    let volume = mesh.algebraic_volume();
    let measured = mesh.diameter();
    let lower = (2.0 * area - 3.0 * c0 * volume).abs() / (2.0 * (area * energy).sqrt());
    let upper = (c0 <= 0.0 && volume > 0.0).then(|| {
        9.0 / (2.0 * std::f64::consts::PI)
            * (energy * (area + 2.0 / 3.0 * c0.abs() * volume)).sqrt()
    });
    Ok(DiameterBounds {
        lower,
        upper,
        measured,
        lower_ok: lower <= measured * 1.02,
        upper_ok: upper.is_none_or(|u| measured <= u * 1.02),
    })
}

/// Lower-bound check `H_c0 > 4 pi` for `c0 < 0` on surfaces with positive
/// concentrated volume.
pub fn helfrich_lower_bound_check(
    mesh: &TriangleImmersion,
    c0: f64,
) -> Result<(f64, bool), LiYauError> {
    if c0 >= 0.0 {
        return Err(LiYauError::NonNegativeC0(c0));
    }
    let curvature = mesh.mean_curvature()?;
    let energy = functionals::helfrich_energy(&curvature, c0);
    Ok((energy, energy > 4.0 * std::f64::consts::PI * 0.98))
}

#[derive(Debug, Clone, Serialize)]
pub struct GammaThreshold {
    pub gamma: f64,
    pub energy_threshold: f64,
}

/// Explicit lower bound for the energy-threshold margin:
/// `4 pi (sqrt(1 + L) - 1)` with `L = |c0| V0 / (2*81*(A0 + (2/3)|c0| V0))`
/// for `c0 < 0`, and `-6 c0 (4 pi^2 V0)^{1/3}` for `c0 >= 0`. The certified
/// energy threshold is `8 pi + gamma`.
pub fn gamma_threshold(c0: f64, a0: f64, v0: f64) -> Result<GammaThreshold, LiYauError> {
    assert!(a0 > 0.0 && v0 > 0.0, "A0 and V0 must be positive");
    let pi = std::f64::consts::PI;
    let lhs = 36.0 * pi * v0 * v0;
    let rhs = a0.powi(3);
    if lhs > rhs * (1.0 + 1e-9) {
        return Err(LiYauError::IsoperimetricViolation { lhs, rhs });
    }
    let gamma = if c0 < 0.0 {
        let l = c0.abs() * v0 / (2.0 * 81.0 * (a0 + 2.0 / 3.0 * c0.abs() * v0));
        4.0 * pi * ((1.0 + l).sqrt() - 1.0)
    } else {
        -6.0 * c0 * (4.0 * pi * pi * v0).cbrt()
    };
    Ok(GammaThreshold {
        gamma,
        energy_threshold: 8.0 * pi + gamma,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct MinkowskiCheck {
    pub lhs: f64,
    pub rhs: f64,
    pub passes: bool,
    pub applicable: bool,
    pub multiplicity: usize,
    pub cmc_deficit: f64,
    pub concentrated_volume: f64,
}

/// Minkowski-type criterion: `(1/2) int H_sc >= sqrt((4 pi m - deficit) A)`
/// whenever the concentrated volume at `x0` is positive and the deficit is
/// at most `4 pi m`, with `m` the multiplicity at `x0`.
pub fn minkowski_check(
    mesh: &TriangleImmersion,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<MinkowskiCheck, LiYauError> {
    let curvature = mesh.mean_curvature()?;
    let area = mesh.total_area();
    let (deficit, _) = functionals::cmc_deficit(&curvature);
    let lhs = functionals::total_mean_curvature(&curvature);
    let cvol = concvol::concentrated_volume(mesh, x0, tol.clamp(1e-6, 0.09))?.value;
    let m = mesh.multiplicity_at(x0, mesh.default_multiplicity_eps());
    let applicable = cvol > 0.0 && deficit <= 4.0 * std::f64::consts::PI * m as f64;
    let rhs = if applicable {
        ((4.0 * std::f64::consts::PI * m as f64 - deficit) * area).sqrt()
    } else {
        f64::NAN
    };
    Ok(MinkowskiCheck {
        lhs,
        rhs,
        passes: applicable && lhs >= rhs * (1.0 - tol),
        applicable,
        multiplicity: m,
        cmc_deficit: deficit,
        concentrated_volume: cvol,
    })
}

/// Worst Li-Yau certificate over the highest-density probe vertices.
pub fn worst_bound_certificate(
    mesh: &TriangleImmersion,
    c0: f64,
    tol: f64,
    n_probes: usize,
) -> Result<LiYauCertificate, LiYauError> {
    let probes = density_ranked_vertices(mesh, n_probes);
    let mut worst: Option<LiYauCertificate> = None;
    for v in probes {
        let cert = liyau_bound(mesh, c0, &mesh.vertices()[v], tol)?;
        let replace = match &worst {
            None => true,
            Some(w) => cert.bound > w.bound,
        };
        if replace {
            worst = Some(cert);
        }
    }
    Ok(worst.expect("at least one probe"))
}
