//! Batch front end: build shapes, evaluate energy reports, Li-Yau
//! certificates, monotonicity profiles, constrained minimizations, and
//! parameter sweeps.
//!
//! Exit codes: 0 success, 1 verdict-level failure (violated certificate),
//! 2 usage or input error, 3 numerical non-convergence.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use nalgebra::Point3;
use serde::Deserialize;

use helfrich::concvol::ConcVolError;
use helfrich::functionals;
use helfrich::geomcore::io;
use helfrich::liyau::{self, Verdict};
use helfrich::optimize::{self, FlowOptions, OptimizeError};
use helfrich::shapes;
use helfrich::varifold::{BoundaryAtom, BoundaryAtoms};
use helfrich::TriangleImmersion;

#[derive(Parser)]
#[command(name = "helfrich", version, about = "Helfrich-functional geometry of triangle surfaces")]
struct Cli {
    /// Cap the rayon thread pool (falls back to HELFRICH_THREADS).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build an example surface and write it as OBJ/OFF.
    Shape(ShapeArgs),
    /// Evaluate every scalar functional of a mesh; JSON on stdout.
    Report(ReportArgs),
    /// Li-Yau multiplicity certificate at a point or over auto probes.
    Liyau(LiyauArgs),
    /// Ball-monotonicity profile; CSV on stdout.
    Monotonicity(MonotonicityArgs),
    /// Constrained Helfrich minimization driven by a JSON config.
    Minimize(MinimizeArgs),
    /// Parameter sweeps; CSV on stdout.
    Sweep(SweepArgs),
}

#[derive(Args)]
struct ShapeArgs {
    /// sphere | capped-cylinder | dumbbell | torus | sphere-torus-mixed | lens
    name: String,
    #[arg(long)]
    r: Option<f64>,
    #[arg(long)]
    l: Option<f64>,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    subdiv: Option<u32>,
    /// Target mean edge length for the revolved constructors.
    #[arg(long, default_value_t = 0.03)]
    resolution: f64,
    #[arg(long)]
    out: PathBuf,
    /// Boundary-atom CSV output (lens only).
    #[arg(long)]
    boundary: Option<PathBuf>,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c0: f64,
    /// Coarser companion mesh for the discretization-error estimate.
    #[arg(long)]
    refined: Option<PathBuf>,
}

#[derive(Args)]
struct LiyauArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c0: f64,
    /// Evaluation point "x,y,z".
    #[arg(long, conflicts_with = "probe_auto", allow_hyphen_values = true)]
    x0: Option<String>,
    /// Probe the 64 densest vertices and report the worst certificate.
    #[arg(long)]
    probe_auto: bool,
    #[arg(long, default_value_t = 1e-3)]
    tol: f64,
    /// Boundary atoms CSV adding the singular first-variation term.
    #[arg(long)]
    boundary: Option<PathBuf>,
}

#[derive(Args)]
struct MonotonicityArgs {
    #[arg(long)]
    mesh: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    c0: f64,
    #[arg(long, allow_hyphen_values = true)]
    x0: String,
    #[arg(long)]
    rho_min: f64,
    #[arg(long)]
    rho_max: f64,
    #[arg(long, default_value_t = 9)]
    n: usize,
}

#[derive(Args)]
struct MinimizeArgs {
    /// JSON config {c0, A0, V0, max_iter, step0, tol}.
    #[arg(long)]
    config: PathBuf,
    /// Start mesh (OBJ/OFF).
    #[arg(long)]
    mesh: PathBuf,
    /// Per-iteration CSV log path (stdout when omitted).
    #[arg(long)]
    log: Option<PathBuf>,
    /// Directory for checkpoint meshes.
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// JSON sweep description.
    #[arg(long)]
    spec: PathBuf,
}

#[derive(Deserialize)]
struct MinimizeConfig {
    c0: f64,
    #[serde(rename = "A0")]
    a0: f64,
    #[serde(rename = "V0")]
    v0: f64,
    #[serde(default = "default_max_iter")]
    max_iter: usize,
    #[serde(default = "default_step0")]
    step0: f64,
    #[serde(default = "default_tol")]
    tol: f64,
}

fn default_max_iter() -> usize {
    200
}
fn default_step0() -> f64 {
    1e-3
}
fn default_tol() -> f64 {
    1e-4
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum SweepSpec {
    PenalizedRadius {
        c0: f64,
        lambda: f64,
        p: f64,
        radii: Vec<f64>,
        #[serde(default = "default_subdiv")]
        subdiv: u32,
    },
    DumbbellNeck {
        c0: f64,
        necks: Vec<f64>,
        #[serde(default)]
        l: f64,
        #[serde(default = "default_small_r")]
        r: f64,
        #[serde(default = "default_resolution")]
        resolution: f64,
    },
}

fn default_subdiv() -> u32 {
    3
}
fn default_small_r() -> f64 {
    1.0
}
fn default_resolution() -> f64 {
    0.06
}

/// Failure carrying its process exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn usage(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }

    fn numeric(message: impl Into<String>) -> Self {
        Self {
            code: 3,
            message: message.into(),
        }
    }

    fn verdict(message: impl Into<String>) -> Self {
        Self {
            code: 1,
            message: message.into(),
        }
    }
}

impl From<io::MeshIoError> for Failure {
    fn from(err: io::MeshIoError) -> Self {
        Failure::usage(err.to_string())
    }
}

impl From<std::io::Error> for Failure {
    fn from(err: std::io::Error) -> Self {
        Failure::usage(err.to_string())
    }
}

impl From<helfrich::geomcore::GeomError> for Failure {
    fn from(err: helfrich::geomcore::GeomError) -> Self {
        Failure::numeric(err.to_string())
    }
}

impl From<ConcVolError> for Failure {
    fn from(err: ConcVolError) -> Self {
        match err {
            ConcVolError::TolOutOfRange(_) | ConcVolError::NegativeVolume(_) => {
                Failure::usage(err.to_string())
            }
            ConcVolError::NonConvergent { .. } => Failure::numeric(err.to_string()),
        }
    }
}

impl From<liyau::LiYauError> for Failure {
    fn from(err: liyau::LiYauError) -> Self {
        match err {
            liyau::LiYauError::ConcVol(inner) => inner.into(),
            liyau::LiYauError::Geometry(inner) => inner.into(),
            liyau::LiYauError::PositiveC0(_)
            | liyau::LiYauError::NonNegativeC0(_)
            | liyau::LiYauError::RhoBelowResolution { .. }
            | liyau::LiYauError::IsoperimetricViolation { .. }
            | liyau::LiYauError::PointOnBoundary => Failure::usage(err.to_string()),
            liyau::LiYauError::ZeroEnergy => Failure::numeric(err.to_string()),
        }
    }
}

impl From<OptimizeError> for Failure {
    fn from(err: OptimizeError) -> Self {
        match err {
            OptimizeError::InfeasibleTargets { .. } => Failure::usage(err.to_string()),
            OptimizeError::ProjectionDiverged { .. } => Failure::numeric(err.to_string()),
            OptimizeError::Geometry(inner) => inner.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let threads = cli.threads.or_else(|| {
        std::env::var("HELFRICH_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = threads {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Shape(args) => cmd_shape(args),
        Command::Report(args) => cmd_report(args),
        Command::Liyau(args) => cmd_liyau(args),
        Command::Monotonicity(args) => cmd_monotonicity(args),
        Command::Minimize(args) => cmd_minimize(args),
        Command::Sweep(args) => cmd_sweep(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn cmd_shape(args: ShapeArgs) -> Result<(), Failure> {
    let require = |value: Option<f64>, flag: &str| {
        value.ok_or_else(|| Failure::usage(format!("shape '{}' requires --{flag}", args.name)))
    };
    let mut boundary_atoms: Option<BoundaryAtoms> = None;
    let mesh = match args.name.as_str() {
        "sphere" => {
            let r = require(args.r, "r")?;
            shapes::sphere(r, args.subdiv.unwrap_or(4))
        }
        "capped-cylinder" | "capsule" => {
            let l = require(args.l, "l")?;
            let r = require(args.r, "r")?;
            shapes::capped_cylinder(l, r, args.resolution)
        }
        "dumbbell" => {
            let a = require(args.a, "a")?;
            let l = require(args.l, "l")?;
            let r = require(args.r, "r")?;
            shapes::dumbbell(a, l, r, args.resolution)
                .map_err(|e| Failure::usage(e.to_string()))?
        }
        "torus" => {
            let r = require(args.r, "r")?;
            shapes::torus(r, args.resolution)
        }
        "sphere-torus-mixed" => {
            let r = require(args.r, "r")?;
            shapes::sphere_torus_mixed(r, args.resolution)
        }
        "lens" => {
            let (mesh, beta) = shapes::lens(args.resolution);
            boundary_atoms = Some(beta);
            mesh
        }
        other => return Err(Failure::usage(format!("unknown shape '{other}'"))),
    };
    io::save_mesh(&mesh, &args.out)?;
    if let Some(path) = &args.boundary {
        let beta = boundary_atoms
            .ok_or_else(|| Failure::usage("--boundary is only produced by 'lens'"))?;
        std::fs::write(path, boundary_to_csv(&beta))?;
    }
    println!(
        "{}: {} vertices, {} faces -> {}",
        args.name,
        mesh.n_vertices(),
        mesh.n_faces(),
        args.out.display()
    );
    Ok(())
}

fn cmd_report(args: ReportArgs) -> Result<(), Failure> {
    let mesh = io::load_mesh(&args.mesh)?;
    let report = match &args.refined {
        Some(path) => {
            let coarser = io::load_mesh(path)?;
            functionals::energy_report_with_reference(&mesh, &coarser, args.c0)?
        }
        None => functionals::energy_report(&mesh, args.c0)?,
    };
    println!("{}", serde_json::to_string_pretty(&report).expect("report serializes"));
    Ok(())
}

fn cmd_liyau(args: LiyauArgs) -> Result<(), Failure> {
    let mesh = io::load_mesh(&args.mesh)?;
    let beta = match &args.boundary {
        Some(path) => Some(boundary_from_csv(&std::fs::read_to_string(path)?)?),
        None => None,
    };
    if args.probe_auto {
        let probes = liyau::density_ranked_vertices(&mesh, 64);
        let mut worst: Option<liyau::LiYauCertificate> = None;
        let mut all_consistent = true;
        for v in probes {
            let x0 = mesh.vertices()[v];
            let cert = certificate_at(&mesh, beta.as_ref(), args.c0, &x0, args.tol)?;
            all_consistent &= cert.verdict == Verdict::Consistent;
            if worst.as_ref().is_none_or(|w| cert.bound > w.bound) {
                worst = Some(cert);
            }
        }
        let worst = worst.expect("at least one probe");
        let out = serde_json::json!({
            "n_probes": 64,
            "all_consistent": all_consistent,
            "worst": worst,
        });
        println!("{}", serde_json::to_string_pretty(&out).expect("serializes"));
        if !all_consistent {
            return Err(Failure::verdict("a probe certificate is violated"));
        }
        return Ok(());
    }
    let x0 = parse_point(
        args.x0
            .as_deref()
            .ok_or_else(|| Failure::usage("provide --x0 or --probe-auto"))?,
    )?;
    let cert = certificate_at(&mesh, beta.as_ref(), args.c0, &x0, args.tol)?;
    println!("{}", serde_json::to_string_pretty(&cert).expect("serializes"));
    if cert.verdict == Verdict::Violated {
        return Err(Failure::verdict("certificate violated"));
    }
    Ok(())
}

fn certificate_at(
    mesh: &TriangleImmersion,
    beta: Option<&BoundaryAtoms>,
    c0: f64,
    x0: &Point3<f64>,
    tol: f64,
) -> Result<liyau::LiYauCertificate, Failure> {
    let cert = match beta {
        Some(beta) => liyau::liyau_bound_with_boundary(mesh, beta, c0, x0, tol)?,
        None => liyau::liyau_bound(mesh, c0, x0, tol)?,
    };
    Ok(cert)
}

fn cmd_monotonicity(args: MonotonicityArgs) -> Result<(), Failure> {
    if args.n < 2 || args.rho_min <= 0.0 || args.rho_max <= args.rho_min {
        return Err(Failure::usage("need n >= 2 and 0 < rho_min < rho_max"));
    }
    let mesh = io::load_mesh(&args.mesh)?;
    let x0 = parse_point(&args.x0)?;
    let rhos: Vec<f64> = (0..args.n)
        .map(|k| {
            args.rho_min + (args.rho_max - args.rho_min) * k as f64 / (args.n - 1) as f64
        })
        .collect();
    let profile = liyau::monotonicity_profile(&mesh, args.c0, &x0, &rhos)?;
    print!("{}", profile.to_csv());
    Ok(())
}

fn cmd_minimize(args: MinimizeArgs) -> Result<(), Failure> {
    let config: MinimizeConfig = serde_json::from_str(&std::fs::read_to_string(&args.config)?)
        .map_err(|e| Failure::usage(format!("bad config: {e}")))?;
    let mesh = io::load_mesh(&args.mesh)?;
    let opts = FlowOptions {
        max_iter: config.max_iter,
        step0: config.step0,
        tol: config.tol,
        ..FlowOptions::default()
    };
    let state = optimize::minimize_constrained(&mesh, config.c0, config.a0, config.v0, &opts)?;

    let mut csv = String::from("iter,energy,residual_area,residual_volume,worst_bound,min_sheet_dist\n");
    for row in &state.log {
        csv.push_str(&format!(
            "{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            row.iter,
            row.energy,
            row.residual_area,
            row.residual_volume,
            row.worst_bound,
            row.min_sheet_dist
        ));
    }
    match &args.log {
        Some(path) => std::fs::write(path, csv)?,
        None => print!("{csv}"),
    }
    if let Some(dir) = &args.checkpoint_dir {
        std::fs::create_dir_all(dir)?;
        io::save_mesh(&state.mesh, &dir.join("final.obj"))?;
    }
    eprintln!(
        "terminated: {:?} after {} iterations, energy {:.6e}",
        state.termination,
        state.iterations,
        state.energy_history.last().unwrap()
    );
    Ok(())
}

fn cmd_sweep(args: SweepArgs) -> Result<(), Failure> {
    let text = std::fs::read_to_string(&args.spec)?;
    let spec: SweepSpec =
        serde_json::from_str(&text).map_err(|e| Failure::usage(format!("bad sweep spec: {e}")))?;
    match spec {
        SweepSpec::PenalizedRadius {
            c0,
            lambda,
            p,
            radii,
            subdiv,
        } => {
            if radii.is_empty() {
                return Err(Failure::usage("empty radius list"));
            }
            println!("r,penalized_energy");
            for r in radii {
                let value = functionals::penalized_energy(&shapes::sphere(r, subdiv), c0, lambda, p)?;
                println!("{:.16e},{:.16e}", r, value);
            }
        }
        SweepSpec::DumbbellNeck {
            c0,
            necks,
            l,
            r,
            resolution,
        } => {
            if necks.is_empty() {
                return Err(Failure::usage("empty neck list"));
            }
            println!("a,helfrich");
            for a in necks {
                let mesh = shapes::dumbbell(a, l, r, resolution)
                    .map_err(|e| Failure::usage(e.to_string()))?;
                let curvature = mesh.mean_curvature()?;
                println!("{:.16e},{:.16e}", a, functionals::helfrich_energy(&curvature, c0));
            }
        }
    }
    Ok(())
}

fn parse_point(text: &str) -> Result<Point3<f64>, Failure> {
    let parts: Vec<f64> = text
        .split(',')
        .map(|t| t.trim().parse())
        .collect::<Result<_, _>>()
        .map_err(|_| Failure::usage(format!("cannot parse point '{text}'")))?;
    if parts.len() != 3 {
        return Err(Failure::usage(format!("point '{text}' must have 3 components")));
    }
    Ok(Point3::new(parts[0], parts[1], parts[2]))
}

fn boundary_to_csv(beta: &BoundaryAtoms) -> String {
    let mut out = String::from("x,y,z,ex,ey,ez,w\n");
    for atom in &beta.atoms {
        out.push_str(&format!(
            "{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}\n",
            atom.position.x,
            atom.position.y,
            atom.position.z,
            atom.direction.x,
            atom.direction.y,
            atom.direction.z,
            atom.weight
        ));
    }
    out
}

fn boundary_from_csv(text: &str) -> Result<BoundaryAtoms, Failure> {
    let mut atoms = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        if lineno == 0 || line.trim().is_empty() {
            continue;
        }
        let values: Vec<f64> = line
            .split(',')
            .map(|t| t.trim().parse())
            .collect::<Result<_, _>>()
            .map_err(|_| Failure::usage(format!("boundary csv line {}: bad number", lineno + 1)))?;
        if values.len() != 7 {
            return Err(Failure::usage(format!(
                "boundary csv line {}: expected 7 columns",
                lineno + 1
            )));
        }
        atoms.push(BoundaryAtom {
            position: Point3::new(values[0], values[1], values[2]),
            direction: nalgebra::Vector3::new(values[3], values[4], values[5]),
            weight: values[6],
        });
    }
    Ok(BoundaryAtoms::new(atoms))
}
