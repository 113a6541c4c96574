//! Wavefront OBJ (v/f records) and OFF mesh ingestion and emission.
//!
//! All coordinates are 64-bit floats written in shortest round-trip form, so
//! a write/read cycle is exact and outputs are byte-identical across runs.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Point3;
use thiserror::Error;

use super::{GeomError, TriangleImmersion};

#[derive(Debug, Error)]
pub enum MeshIoError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("{path}:{line}: {msg}")]
    Parse {
        path: String,
        line: usize,
        msg: String,
    },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error("unsupported mesh format for '{0}' (expected .obj or .off)")]
    UnknownFormat(String),
}

/// Load a mesh, dispatching on the file extension.
pub fn load_mesh(path: &Path) -> Result<TriangleImmersion, MeshIoError> {
    let text = std::fs::read_to_string(path)?;
    match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("obj") => parse_obj(&text, &path.display().to_string()),
        Some(ext) if ext.eq_ignore_ascii_case("off") => parse_off(&text, &path.display().to_string()),
        _ => Err(MeshIoError::UnknownFormat(path.display().to_string())),
    }
}

/// Write a mesh, dispatching on the file extension.
pub fn save_mesh(mesh: &TriangleImmersion, path: &Path) -> Result<(), MeshIoError> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some(ext) if ext.eq_ignore_ascii_case("obj") => to_obj(mesh),
        Some(ext) if ext.eq_ignore_ascii_case("off") => to_off(mesh),
        _ => return Err(MeshIoError::UnknownFormat(path.display().to_string())),
    };
    std::fs::write(path, text)?;
    Ok(())
}

pub fn parse_obj(text: &str, path: &str) -> Result<TriangleImmersion, MeshIoError> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let mut coords = [0.0f64; 3];
                for coord in &mut coords {
                    *coord = tokens
                        .next()
                        .and_then(|t| t.parse().ok())
                        .ok_or_else(|| parse_err(path, lineno, "bad vertex record"))?;
                }
                vertices.push(Point3::new(coords[0], coords[1], coords[2]));
            }
            Some("f") => {
                let idx: Vec<usize> = tokens
                    .map(|t| {
                        // "i", "i/j" and "i/j/k" all carry the vertex first.
                        t.split('/')
                            .next()
                            .and_then(|s| s.parse::<usize>().ok())
                            .ok_or_else(|| parse_err(path, lineno, "bad face record"))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(path, lineno, "only triangle faces are supported"));
                }
                if idx.iter().any(|&i| i == 0) {
                    return Err(parse_err(path, lineno, "OBJ indices are 1-based"));
                }
                faces.push([idx[0] - 1, idx[1] - 1, idx[2] - 1]);
            }
            _ => {}
        }
    }
    Ok(TriangleImmersion::build(vertices, faces)?)
}

pub fn parse_off(text: &str, path: &str) -> Result<TriangleImmersion, MeshIoError> {
    let mut lines = text
        .lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty() && !l.trim_start().starts_with('#'));
    let (lineno, header) = lines
        .next()
        .ok_or_else(|| parse_err(path, 0, "empty OFF file"))?;
    if header.trim() != "OFF" {
        return Err(parse_err(path, lineno, "missing OFF header"));
    }
    let (lineno, counts) = lines
        .next()
        .ok_or_else(|| parse_err(path, lineno, "missing count line"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse())
        .collect::<Result<_, _>>()
        .map_err(|_| parse_err(path, lineno, "bad count line"))?;
    if counts.len() < 2 {
        return Err(parse_err(path, lineno, "bad count line"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "truncated vertex list"))?;
        let coords: Vec<f64> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(path, lineno, "bad vertex line"))?;
        if coords.len() != 3 {
            return Err(parse_err(path, lineno, "expected 3 coordinates"));
        }
        vertices.push(Point3::new(coords[0], coords[1], coords[2]));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (lineno, line) = lines
            .next()
            .ok_or_else(|| parse_err(path, 0, "truncated face list"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse())
            .collect::<Result<_, _>>()
            .map_err(|_| parse_err(path, lineno, "bad face line"))?;
        if idx.len() != 4 || idx[0] != 3 {
            return Err(parse_err(path, lineno, "only triangle faces are supported"));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    Ok(TriangleImmersion::build(vertices, faces)?)
}

pub fn to_obj(mesh: &TriangleImmersion) -> String {
    let mut out = String::new();
    for p in mesh.vertices() {
        writeln!(out, "v {} {} {}", p.x, p.y, p.z).unwrap();
    }
    for &[a, b, c] in mesh.faces() {
        writeln!(out, "f {} {} {}", a + 1, b + 1, c + 1).unwrap();
    }
    out
}

pub fn to_off(mesh: &TriangleImmersion) -> String {
    let mut out = String::from("OFF\n");
    writeln!(out, "{} {} 0", mesh.n_vertices(), mesh.n_faces()).unwrap();
    for p in mesh.vertices() {
        writeln!(out, "{} {} {}", p.x, p.y, p.z).unwrap();
    }
    for &[a, b, c] in mesh.faces() {
        writeln!(out, "3 {} {} {}", a, b, c).unwrap();
    }
    out
}

fn parse_err(path: &str, lineno: usize, msg: &str) -> MeshIoError {
    MeshIoError::Parse {
        path: path.to_string(),
        line: lineno + 1,
        msg: msg.to_string(),
    }
}
