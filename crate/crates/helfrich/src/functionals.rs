//! Scalar energy functionals: Helfrich bending energy, Willmore energy,
//! CMC deficit, total mean curvature, and the penalized combination with
//! area and volume terms.
//!
//! Mesh energies use vertex quadrature (scalar curvature at vertices against
//! barycentric areas); atom-based overloads integrate against varifold
//! weights.

use serde::Serialize;

use crate::geomcore::{CurvatureField, GeomError, TriangleImmersion};
use crate::numeric::pairwise_sum;
use crate::varifold::OrientedVarifoldAtoms;

/// Bending energy `(1/4) integral (H_sc - c0)^2`.
pub fn helfrich_energy(curvature: &CurvatureField, c0: f64) -> f64 {
    let terms: Vec<f64> = curvature
        .vertex_area
        .iter()
        .zip(&curvature.h_scalar)
        .map(|(&a, &h)| 0.25 * a * (h - c0) * (h - c0))
        .collect();
    pairwise_sum(&terms)
}

/// Atom-quadrature Helfrich energy for a varifold with per-atom scalar
/// curvature.
pub fn helfrich_energy_atoms(varifold: &OrientedVarifoldAtoms, h_sc: &[f64], c0: f64) -> f64 {
    assert_eq!(varifold.atoms.len(), h_sc.len());
    let terms: Vec<f64> = varifold
        .atoms
        .iter()
        .zip(h_sc)
        .map(|(a, &h)| 0.25 * a.weight * (h - c0) * (h - c0))
        .collect();
    pairwise_sum(&terms)
}

/// Willmore energy: the Helfrich energy at zero spontaneous curvature.
pub fn willmore_energy(curvature: &CurvatureField) -> f64 {
    helfrich_energy(curvature, 0.0)
}

/// L2-CMC deficit and the area-averaged scalar mean curvature realizing it.
pub fn cmc_deficit(curvature: &CurvatureField) -> (f64, f64) {
    let area = pairwise_sum(&curvature.vertex_area);
    let weighted: Vec<f64> = curvature
        .vertex_area
        .iter()
        .zip(&curvature.h_scalar)
        .map(|(&a, &h)| a * h)
        .collect();
    let mean = pairwise_sum(&weighted) / area;
    (helfrich_energy(curvature, mean), mean)
}

/// Total scalar mean curvature `(1/2) integral H_sc`.
pub fn total_mean_curvature(curvature: &CurvatureField) -> f64 {
    let terms: Vec<f64> = curvature
        .vertex_area
        .iter()
        .zip(&curvature.h_scalar)
        .map(|(&a, &h)| 0.5 * a * h)
        .collect();
    pairwise_sum(&terms)
}

/// Penalized energy `H_c0 + lambda * area + p * volume` (tensile stress and
/// osmotic pressure terms).
pub fn penalized_energy(
    mesh: &TriangleImmersion,
    c0: f64,
    lambda: f64,
    p: f64,
) -> Result<f64, GeomError> {
    let curvature = mesh.mean_curvature()?;
    Ok(helfrich_energy(&curvature, c0) + lambda * mesh.total_area() + p * mesh.algebraic_volume())
}

/// Flat summary of every scalar functional of a mesh at a given spontaneous
/// curvature.
#[derive(Debug, Clone, Serialize)]
pub struct EnergyReport {
    pub area: f64,
    pub algebraic_volume: f64,
    pub helfrich: f64,
    pub willmore: f64,
    pub cmc_deficit: f64,
    pub average_h_sc: f64,
    pub total_mean_curvature: f64,
    pub isoperimetric_ratio: f64,
    pub c0: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub discretization_error: Option<f64>,
}

pub fn energy_report(mesh: &TriangleImmersion, c0: f64) -> Result<EnergyReport, GeomError> {
    let curvature = mesh.mean_curvature()?;
    let area = mesh.total_area();
    let volume = mesh.algebraic_volume();
    let (deficit, average) = cmc_deficit(&curvature);
    Ok(EnergyReport {
        area,
        algebraic_volume: volume,
        helfrich: helfrich_energy(&curvature, c0),
        willmore: willmore_energy(&curvature),
        cmc_deficit: deficit,
        average_h_sc: average,
        total_mean_curvature: total_mean_curvature(&curvature),
        isoperimetric_ratio: area.powi(3) / (volume * volume),
        c0,
        discretization_error: None,
    })
}

/// Report with the refinement-pair error estimate
/// `|helfrich(fine) - helfrich(coarse)|`.
pub fn energy_report_with_reference(
    mesh: &TriangleImmersion,
    coarser: &TriangleImmersion,
    c0: f64,
) -> Result<EnergyReport, GeomError> {
    let mut report = energy_report(mesh, c0)?;
    let coarse = energy_report(coarser, c0)?;
    report.discretization_error = Some((report.helfrich - coarse.helfrich).abs());
    Ok(report)
}
