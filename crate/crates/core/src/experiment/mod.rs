//! Configuration-driven experiments: build a geometry, run a flow, and
//! write `trajectory.csv`, `variation.csv` and `summary.json`.

mod config;
mod output;

use std::f64::consts::PI;
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use config::{load_config, parse_config, ExperimentConfig, ExperimentKind, Geometry, Perturbation};
pub use output::{trajectory_csv, variation_csv, write_outputs, Summary};

use crate::error::{Error, Result};
use crate::flow::{ConformalState, FlowMode, RicciFlow};
use crate::mesh::{build_flat_torus, build_icosphere, load_off, Mesh};
use crate::spectral::SpectralSolver;
use crate::variation::{perelman_sequence, variation_report, SpectrumTrajectory, VariationReport};

/// Process exit codes.
pub const EXIT_OK: i32 = 0;
pub const EXIT_SOLVER_FAILURE: i32 = 2;
pub const EXIT_CONFIG_ERROR: i32 = 3;

/// Maps an error to the process exit code: problems with the input or the
/// output location are configuration errors, the rest happened while solving.
pub fn exit_code(error: &Error) -> i32 {
    match error {
        Error::Config { .. }
        | Error::Parse { .. }
        | Error::Input(_)
        | Error::InvalidMesh(_)
        | Error::DegenerateFace { .. }
        | Error::Resource(_)
        | Error::Domain(_)
        | Error::Io(_) => EXIT_CONFIG_ERROR,
        _ => EXIT_SOLVER_FAILURE,
    }
}

pub fn build_geometry(geometry: &Geometry) -> Result<Mesh> {
    match geometry {
        Geometry::Icosphere { subdivisions, radius } => build_icosphere(*subdivisions, *radius),
        Geometry::FlatTorus { n, m, l1, l2 } => build_flat_torus(*n, *m, *l1, *l2),
        Geometry::OffFile { path } => load_off(path),
    }
}

/// Smooth per-vertex coordinates for the perturbation polynomial: the unit
/// position on spheres, angle cosines and sines on tori, and centred,
/// rescaled positions for loaded meshes.
fn perturbation_coordinates(mesh: &Mesh, geometry: &Geometry) -> Vec<Vec<f64>> {
    match geometry {
        Geometry::Icosphere { radius, .. } => mesh.vertices().iter().map(|p| p.iter().map(|x| x / radius).collect()).collect(),
        Geometry::FlatTorus { l1, l2, .. } => mesh
            .vertices()
            .iter()
            .map(|p| {
                let (a, b) = (2.0 * PI * p[0] / l1, 2.0 * PI * p[1] / l2);
                vec![a.cos(), a.sin(), b.cos(), b.sin()]
            })
            .collect(),
        Geometry::OffFile { .. } => {
            let n = mesh.vertex_count() as f64;
            let mut centre = [0.0; 3];
            for p in mesh.vertices() {
                (0..3).for_each(|k| centre[k] += p[k] / n);
            }
            let scale = mesh
                .vertices()
                .iter()
                .map(|p| (0..3).map(|k| (p[k] - centre[k]).powi(2)).sum::<f64>().sqrt())
                .fold(0.0, f64::max)
                .max(f64::MIN_POSITIVE);
            mesh.vertices().iter().map(|p| (0..3).map(|k| (p[k] - centre[k]) / scale).collect()).collect()
        }
    }
}

/// Exponent tuples of total degree `1..=degree` in `vars` variables, in a
/// fixed order.
fn monomials(vars: usize, degree: u32) -> Vec<Vec<u32>> {
    fn rec(vars: usize, remaining: u32, prefix: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if prefix.len() == vars {
            out.push(prefix.clone());
            return;
        }
        for e in 0..=remaining {
            prefix.push(e);
            rec(vars, remaining - e, prefix, out);
            prefix.pop();
        }
    }
    let mut out = Vec::new();
    rec(vars, degree, &mut Vec::new(), &mut out);
    out.retain(|m| m.iter().sum::<u32>() >= 1);
    out
}

/// The seeded conformal bump `u0` described by `perturbation`.
pub fn perturbation_field(mesh: &Mesh, geometry: &Geometry, perturbation: &Perturbation) -> Vec<f64> {
    let coords = perturbation_coordinates(mesh, geometry);
    let vars = coords.first().map_or(0, Vec::len);
    let mut rng = ChaCha8Rng::seed_from_u64(perturbation.seed);
    let terms: Vec<(Vec<u32>, f64)> =
        monomials(vars, perturbation.degree).into_iter().map(|m| (m, rng.random_range(-1.0..1.0))).collect();
    let p: Vec<f64> = coords
        .iter()
        .map(|x| {
            terms
                .iter()
                .map(|(m, c)| c * m.iter().zip(x).map(|(&e, xi)| xi.powi(e as i32)).product::<f64>())
                .sum()
        })
        .collect();
    let max = p.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if max == 0.0 {
        return p;
    }
    p.into_iter().map(|v| perturbation.amplitude * v / max).collect()
}

/// Initial state of an experiment: the perturbation, then for the conjecture
/// experiment a constant shift to unit area.
pub fn initial_state(mesh: Arc<Mesh>, cfg: &ExperimentConfig) -> Result<ConformalState> {
    let mut u = match &cfg.perturbation {
        Some(p) => perturbation_field(&mesh, &cfg.geometry, p),
        None => vec![0.0; mesh.vertex_count()],
    };
    if cfg.experiment == ExperimentKind::Conjecture {
        let area: f64 = mesh.base_vertex_area().iter().zip(&u).map(|(a, x)| a * x.exp()).sum();
        let shift = area.ln();
        u.iter_mut().for_each(|x| *x -= shift);
    }
    ConformalState::new(mesh, u, 0.0)
}

/// Everything an experiment computed, whether or not it ran to completion.
#[derive(Debug)]
pub struct ExperimentRun {
    pub summary: Summary,
    pub trajectory: Option<SpectrumTrajectory>,
    pub report: VariationReport,
    pub perelman: Vec<f64>,
}

/// Runs `cfg` and, when `out` is given, writes the output files there (also
/// on failure, with whatever was recorded). Errors carry the cause; use
/// [`exit_code`] to classify them.
pub fn run_experiment(cfg: &ExperimentConfig, out: Option<&Path>) -> Result<ExperimentRun> {
    let (run, error) = execute(cfg)?;
    if let Some(dir) = out {
        write_outputs(dir, &run)?;
    }
    match error {
        Some(e) => Err(e),
        None => Ok(run),
    }
}

fn execute(cfg: &ExperimentConfig) -> Result<(ExperimentRun, Option<Error>)> {
    if cfg.experiment == ExperimentKind::Soliton && matches!(cfg.geometry, Geometry::OffFile { .. }) {
        return Err(Error::Config {
            line: None,
            message: "the soliton experiment needs a model geometry (icosphere or flat_torus)".into(),
        });
    }
    let mesh = Arc::new(build_geometry(&cfg.geometry)?);
    let flow = RicciFlow::new(mesh.clone())?;
    let state = initial_state(mesh.clone(), cfg)?;

    let (trajectory, mut error) = match flow.run(&state, &cfg.flow) {
        Ok(t) => (Some(t), None),
        Err(failure) => (failure.partial, Some(failure.error)),
    };
    let mut report = VariationReport::default();
    let mut perelman = Vec::new();
    if let Some(traj) = &trajectory {
        if error.is_none() {
            match variation_report(traj) {
                Ok(r) => report = r,
                Err(e) => error = Some(e),
            }
        }
        if error.is_none() && cfg.flow.mode == FlowMode::Unnormalized {
            match perelman_sequence(traj, &SpectralSolver::new(cfg.flow.solver.clone())) {
                Ok(p) => perelman = p,
                Err(e) => error = Some(e),
            }
        }
    }
    let summary = Summary::build(cfg, &mesh, &state, trajectory.as_ref(), &report, &perelman, error.as_ref());
    Ok((ExperimentRun { summary, trajectory, report, perelman }, error))
}
