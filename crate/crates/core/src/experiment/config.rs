use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{Error, Result};
use crate::flow::{FlowConfig, FlowMode};
use crate::spectral::SolverConfig;

/// The named experiment suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, serde::Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Flow,
    Verify,
    Soliton,
    Conjecture,
    Perelman,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            ExperimentKind::Flow => "flow",
            ExperimentKind::Verify => "verify",
            ExperimentKind::Soliton => "soliton",
            ExperimentKind::Conjecture => "conjecture",
            ExperimentKind::Perelman => "perelman",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Geometry {
    Icosphere {
        subdivisions: u32,
        #[serde(default = "unit")]
        radius: f64,
    },
    FlatTorus {
        n: usize,
        m: usize,
        #[serde(default = "unit")]
        l1: f64,
        #[serde(default = "unit")]
        l2: f64,
    },
    OffFile {
        path: PathBuf,
    },
}

fn unit() -> f64 {
    1.0
}

/// `u0 = amplitude · p` for a random polynomial `p` of the given degree in
/// the vertex coordinates, scaled so that `max |p| = 1`.
#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Perturbation {
    pub amplitude: f64,
    #[serde(default = "default_degree")]
    pub degree: u32,
    #[serde(default)]
    pub seed: u64,
}

fn default_degree() -> u32 {
    2
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFlow {
    mode: Option<FlowMode>,
    dt_init: Option<f64>,
    t_end: Option<f64>,
    cfl_safety: Option<f64>,
    curvature_cap: Option<f64>,
    area_floor: Option<f64>,
    spectrum_k: Option<usize>,
    record_every: Option<usize>,
    curvature_spread_tol: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSolver {
    tol: Option<f64>,
    max_iterations: Option<usize>,
    seed: Option<u64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawOutput {
    dir: Option<PathBuf>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    experiment: Option<ExperimentKind>,
    geometry: Geometry,
    perturbation: Option<Perturbation>,
    #[serde(default)]
    flow: RawFlow,
    #[serde(default)]
    solver: RawSolver,
    #[serde(default)]
    output: RawOutput,
}

#[derive(Debug, Clone)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    pub geometry: Geometry,
    pub perturbation: Option<Perturbation>,
    pub flow: FlowConfig,
    pub output_dir: Option<PathBuf>,
}

/// Conjecture runs stop on curvature convergence rather than on time.
const CONJECTURE_SPREAD_TOL: f64 = 0.01;
const CONJECTURE_T_END: f64 = 10.0;

/// Parses and validates a TOML experiment description. `experiment`
/// overrides the file's `experiment` key, which must agree when present.
pub fn parse_config(text: &str, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| {
        // tagged tables report the whole table's span; point at the key instead
        let message = e.message();
        let unknown = message
            .strip_prefix("unknown field `")
            .and_then(|rest| rest.split_once('`'))
            .and_then(|(key, _)| line_of_any_key(text, key));
        let mistyped = message.strip_prefix("invalid type: ").and_then(|rest| line_of_value(text, rest));
        let line = unknown.or(mistyped).or_else(|| e.span().map(|s| line_of_offset(text, s.start)));
        Error::Config { line, message: message.to_string() }
    })?;
    let at = |section: &str, key: &str, message: String| Error::Config { line: line_of_key(text, section, key), message };

    let kind = match (experiment, raw.experiment) {
        (Some(a), Some(b)) if a != b => {
            return Err(at("", "experiment", format!("config names experiment '{}' but '{}' was requested", b.name(), a.name())));
        }
        (Some(a), _) => a,
        (None, Some(b)) => b,
        (None, None) => ExperimentKind::Flow,
    };

    match &raw.geometry {
        Geometry::Icosphere { subdivisions, radius } => {
            if *subdivisions > crate::mesh::MAX_ICOSPHERE_SUBDIVISIONS {
                return Err(at("geometry", "subdivisions", format!("subdivisions must be at most {}", crate::mesh::MAX_ICOSPHERE_SUBDIVISIONS)));
            }
            if !(radius.is_finite() && *radius > 0.0) {
                return Err(at("geometry", "radius", format!("radius must be positive, got {radius}")));
            }
        }
        Geometry::FlatTorus { n, m, l1, l2 } => {
            if *n < 3 || *m < 3 {
                return Err(at("geometry", "n", "torus grid needs n, m >= 3".into()));
            }
            for (key, v) in [("l1", l1), ("l2", l2)] {
                if !(v.is_finite() && *v > 0.0) {
                    return Err(at("geometry", key, format!("{key} must be positive, got {v}")));
                }
            }
        }
        Geometry::OffFile { .. } => {}
    }

    if let Some(p) = &raw.perturbation {
        if !(p.amplitude.is_finite() && p.amplitude >= 0.0) {
            return Err(at("perturbation", "amplitude", format!("amplitude must be nonnegative, got {}", p.amplitude)));
        }
        if !(1..=8).contains(&p.degree) {
            return Err(at("perturbation", "degree", format!("degree must lie in 1..=8, got {}", p.degree)));
        }
    }

    let defaults = FlowConfig::default();
    let f = &raw.flow;
    let forced_mode = match kind {
        ExperimentKind::Conjecture => Some(FlowMode::Normalized),
        ExperimentKind::Soliton | ExperimentKind::Perelman => Some(FlowMode::Unnormalized),
        _ => None,
    };
    let mode = match (forced_mode, f.mode) {
        (Some(forced), Some(m)) if forced != m => {
            return Err(at("flow", "mode", format!("the {} experiment requires {:?} flow", kind.name(), forced).to_lowercase()));
        }
        (Some(forced), _) => forced,
        (None, m) => m.unwrap_or(defaults.mode),
    };
    let conjecture = kind == ExperimentKind::Conjecture;
    let flow = FlowConfig {
        mode,
        dt_init: f.dt_init.unwrap_or(defaults.dt_init),
        t_end: f.t_end.unwrap_or(if conjecture { CONJECTURE_T_END } else { defaults.t_end }),
        cfl_safety: f.cfl_safety.unwrap_or(defaults.cfl_safety),
        curvature_cap: f.curvature_cap.unwrap_or(defaults.curvature_cap),
        area_floor: f.area_floor,
        spectrum_k: f.spectrum_k.unwrap_or(defaults.spectrum_k),
        record_every: f.record_every.unwrap_or(defaults.record_every),
        curvature_spread_tol: f.curvature_spread_tol.or(conjecture.then_some(CONJECTURE_SPREAD_TOL)),
        solver: SolverConfig {
            tol: raw.solver.tol.unwrap_or(defaults.solver.tol),
            max_iterations: raw.solver.max_iterations,
            seed: raw.solver.seed.unwrap_or(defaults.solver.seed),
            ..defaults.solver
        },
    };
    if let Err(Error::Input(message)) = flow.validate() {
        let key = ["dt_init", "t_end", "cfl_safety", "curvature_cap", "area_floor", "curvature_spread_tol", "spectrum_k", "record_every"]
            .into_iter()
            .find(|k| message.contains(k))
            .unwrap_or("");
        return Err(at("flow", key, message));
    }
    if !(flow.solver.tol >= 1e-14 && flow.solver.tol < 1.0) {
        return Err(at("solver", "tol", format!("solver tol must lie in [1e-14, 1), got {}", flow.solver.tol)));
    }

    Ok(ExperimentConfig {
        experiment: kind,
        geometry: raw.geometry,
        perturbation: raw.perturbation,
        flow,
        output_dir: raw.output.dir,
    })
}

/// Reads a config file; relative OFF and output paths resolve against the
/// file's directory.
pub fn load_config(path: &Path, experiment: Option<ExperimentKind>) -> Result<ExperimentConfig> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| Error::Config { line: None, message: format!("cannot read {}: {e}", path.display()) })?;
    let mut cfg = parse_config(&text, experiment)?;
    let base = path.parent().unwrap_or(Path::new(""));
    if let Geometry::OffFile { path: p } = &mut cfg.geometry {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    if let Some(dir) = &mut cfg.output_dir {
        if dir.is_relative() {
            *dir = base.join(&*dir);
        }
    }
    Ok(cfg)
}

fn line_of_offset(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

fn line_of_any_key(text: &str, key: &str) -> Option<usize> {
    text.lines().position(|l| l.split('#').next().unwrap_or("").split_once('=').is_some_and(|(k, _)| k.trim() == key)).map(|i| i + 1)
}

/// Line holding the offending value of an `invalid type` message such as
/// `string "two", expected u32`, when it is unique.
fn line_of_value(text: &str, description: &str) -> Option<usize> {
    let literal = if let Some((_, rest)) = description.split_once('"') {
        format!("\"{}\"", rest.rsplit_once('"')?.0)
    } else {
        description.split_once('`')?.1.split_once('`')?.0.to_string()
    };
    let mut hits = text.lines().enumerate().filter(|(_, l)| {
        l.split('#').next().unwrap_or("").split_once('=').is_some_and(|(_, v)| v.trim() == literal)
    });
    match (hits.next(), hits.next()) {
        (Some((i, _)), None) => Some(i + 1),
        _ => None,
    }
}

/// Line of `key = ...` inside `[section]` (top level for an empty section).
fn line_of_key(text: &str, section: &str, key: &str) -> Option<usize> {
    let mut current = String::new();
    for (i, line) in text.lines().enumerate() {
        let line = line.split('#').next().unwrap_or("").trim();
        if let Some(name) = line.strip_prefix('[').and_then(|l| l.strip_suffix(']')) {
            current = name.trim().to_string();
            continue;
        }
        if current == section {
            if let Some((k, _)) = line.split_once('=') {
                if k.trim() == key {
                    return Some(i + 1);
                }
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "[geometry]\nkind = \"icosphere\"\nsubdivisions = 2\n";

    #[test]
    fn defaults_are_applied() {
        let cfg = parse_config(MINIMAL, None).unwrap();
        assert_eq!(cfg.experiment, ExperimentKind::Flow);
        assert_eq!(cfg.flow.dt_init, 1e-3);
        assert_eq!(cfg.flow.spectrum_k, 6);
        assert_eq!(cfg.flow.record_every, 10);
        assert_eq!(cfg.geometry, Geometry::Icosphere { subdivisions: 2, radius: 1.0 });
    }

    #[test]
    fn unknown_key_names_its_line() {
        let text = format!("{MINIMAL}\n[flow]\nfoo = 3\n");
        match parse_config(&text, None) {
            Err(Error::Config { line, message }) => {
                assert_eq!(line, Some(6));
                assert!(message.contains("foo"), "{message}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn unknown_key_in_tagged_table() {
        let text = "[geometry]\nkind = \"icosphere\"\nsubdivisions = 2\nfoo = 1\n";
        assert!(matches!(parse_config(text, None), Err(Error::Config { line: Some(4), .. })));
    }

    #[test]
    fn conjecture_forces_normalized_flow() {
        let cfg = parse_config(MINIMAL, Some(ExperimentKind::Conjecture)).unwrap();
        assert_eq!(cfg.flow.mode, FlowMode::Normalized);
        assert_eq!(cfg.flow.curvature_spread_tol, Some(0.01));
        let clash = format!("{MINIMAL}[flow]\nmode = \"unnormalized\"\n");
        assert!(matches!(parse_config(&clash, Some(ExperimentKind::Conjecture)), Err(Error::Config { line: Some(5), .. })));
    }
}
