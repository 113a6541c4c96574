//! Geometry of oriented immersed triangle surfaces under the Helfrich bending
//! energy: discrete curvature, oriented varifold atoms, concentrated volume,
//! Li-Yau multiplicity bounds, diameter estimates, and desk-scale constrained
//! minimization.
//!
//! The crate is organized around an immutable [`geomcore::TriangleImmersion`];
//! every operation is a pure function of its inputs, so meshes and atom lists
//! can be shared freely across threads.

pub mod concvol;
pub mod functionals;
pub mod geomcore;
pub mod liyau;
pub mod numeric;
pub mod optimize;
pub mod shapes;
pub mod varifold;

pub use geomcore::TriangleImmersion;
