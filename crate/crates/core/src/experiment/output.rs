use std::f64::consts::PI;
use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;

use super::{ExperimentConfig, ExperimentKind, ExperimentRun, Geometry};
use crate::error::{Error, Result};
use crate::flow::{ConformalState, FlowMode};
use crate::mesh::Mesh;
use crate::variation::{worst_decrease, SpectrumTrajectory, StopReason, VariationReport};

/// Per-step slack for eigenvalue monotonicity.
pub const EIGENVALUE_SLACK: f64 = 1e-8;
/// Per-step slack for Perelman's functional.
pub const PERELMAN_SLACK: f64 = 1e-6;

#[derive(Debug, Clone, Serialize)]
pub struct MonotoneSeries {
    pub initial: f64,
    pub last: f64,
    pub worst_decrease: f64,
    pub nondecreasing: bool,
}

impl MonotoneSeries {
    fn new(values: &[f64], slack: f64) -> Option<Self> {
        let worst = worst_decrease(values);
        Some(MonotoneSeries {
            initial: *values.first()?,
            last: *values.last()?,
            worst_decrease: worst,
            nondecreasing: worst <= slack,
        })
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VariationSummary {
    pub rows: usize,
    pub reliable_simple_rows: usize,
    pub median_rel_error: Option<f64>,
    pub max_integ_res_1: f64,
    pub max_integ_res_2: f64,
    pub max_abs_fd_rate: f64,
    pub max_abs_rhs_rate: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Summary {
    pub experiment: ExperimentKind,
    pub mode: FlowMode,
    pub vertices: usize,
    pub faces: usize,
    pub euler_characteristic: i64,
    pub stopping_reason: Option<StopReason>,
    pub blowup_time_estimate: Option<f64>,
    pub final_time: Option<f64>,
    pub snapshots: usize,
    pub initial_area: f64,
    pub final_area: Option<f64>,
    /// Unnormalized: `max |A(t) − (A0 − 4πχt)| / A0`. Normalized: `max |A(t) − A0| / A0`.
    pub area_error: Option<f64>,
    /// `max |∫R dμ − 4πχ|` over recorded times.
    pub gauss_bonnet_max_defect: Option<f64>,
    pub initial_r_min: f64,
    pub tracking_losses: usize,
    /// Every tracked `λ_k` nondecreasing within the per-step slack.
    pub eigenvalues_nondecreasing: Option<bool>,
    pub eigenvalue_worst_decrease: Option<f64>,
    pub lambda1_area: Option<MonotoneSeries>,
    /// `|λ1·A − 8π| / 8π` at the last snapshot, for spheres.
    pub lambda1_area_rel_error_8pi: Option<f64>,
    pub perelman: Option<MonotoneSeries>,
    pub variation: VariationSummary,
    /// `max |λ1(t) σ(t) / λ1(0) − 1|` against the model soliton.
    pub soliton_max_deviation: Option<f64>,
    pub error: Option<String>,
}

impl Summary {
    pub(super) fn build(
        cfg: &ExperimentConfig,
        mesh: &Mesh,
        initial: &ConformalState,
        traj: Option<&SpectrumTrajectory>,
        report: &VariationReport,
        perelman: &[f64],
        error: Option<&Error>,
    ) -> Self {
        let chi = mesh.euler_characteristic();
        let initial_area = initial.area();
        let snaps = traj.map_or(&[][..], |t| &t.snapshots[..]);

        let area_error = (!snaps.is_empty()).then(|| {
            snaps
                .iter()
                .map(|s| {
                    let expected = match cfg.flow.mode {
                        FlowMode::Unnormalized => initial_area - 4.0 * PI * chi as f64 * (s.t - initial.t),
                        FlowMode::Normalized => initial_area,
                    };
                    (s.area - expected).abs() / initial_area
                })
                .fold(0.0, f64::max)
        });
        let gauss_bonnet_max_defect = (!snaps.is_empty())
            .then(|| snaps.iter().map(|s| (s.r_avg * s.area - 4.0 * PI * chi as f64).abs()).fold(0.0, f64::max));

        let (eigenvalues_nondecreasing, eigenvalue_worst_decrease) = if snaps.is_empty() {
            (None, None)
        } else {
            let k = snaps[0].eigenpairs.len();
            let worst = (1..k)
                .map(|j| worst_decrease(&snaps.iter().map(|s| s.eigenpairs[j].lambda).collect::<Vec<_>>()))
                .fold(0.0, f64::max);
            (Some(worst <= EIGENVALUE_SLACK), Some(worst))
        };

        let l1a: Vec<f64> = snaps.iter().map(|s| s.lambda1() * s.area).collect();
        let lambda1_area = MonotoneSeries::new(&l1a, EIGENVALUE_SLACK * l1a.first().map_or(1.0, |v| v.abs().max(1.0)));
        let lambda1_area_rel_error_8pi =
            (chi == 2).then(|| l1a.last().map(|v| (v - 8.0 * PI).abs() / (8.0 * PI))).flatten();

        let soliton_max_deviation = (cfg.experiment == ExperimentKind::Soliton && !snaps.is_empty()).then(|| {
            let lambda0 = snaps[0].lambda1();
            snaps
                .iter()
                .map(|s| {
                    let sigma = match cfg.geometry {
                        Geometry::Icosphere { radius, .. } => 1.0 - 2.0 * (s.t - initial.t) / (radius * radius),
                        _ => 1.0,
                    };
                    (s.lambda1() * sigma / lambda0 - 1.0).abs()
                })
                .fold(0.0, f64::max)
        });

        let max_of = |f: fn(&crate::variation::VariationRow) -> f64| report.rows.iter().map(f).fold(0.0, f64::max);
        let variation = VariationSummary {
            rows: report.rows.len(),
            reliable_simple_rows: report.rows.iter().filter(|r| !r.is_cluster && r.tracking_ok).count(),
            median_rel_error: report.median_simple_rel_error(),
            max_integ_res_1: max_of(|r| r.integ_res_1),
            max_integ_res_2: max_of(|r| r.integ_res_2),
            max_abs_fd_rate: max_of(|r| r.fd_rate.abs()),
            max_abs_rhs_rate: max_of(|r| r.rhs_rate.abs()),
        };

        let initial_r_min = snaps.first().map_or(f64::NAN, |s| s.r_min);
        Summary {
            experiment: cfg.experiment,
            mode: cfg.flow.mode,
            vertices: mesh.vertex_count(),
            faces: mesh.face_count(),
            euler_characteristic: chi,
            stopping_reason: traj.map(|t| t.stopping_reason),
            blowup_time_estimate: traj.and_then(|t| t.blowup_time_estimate),
            final_time: traj.map(|t| t.final_time),
            snapshots: snaps.len(),
            initial_area,
            final_area: traj.map(|t| t.final_area),
            area_error,
            gauss_bonnet_max_defect,
            initial_r_min,
            tracking_losses: snaps.iter().map(|s| s.tracking_lost.len()).sum(),
            eigenvalues_nondecreasing,
            eigenvalue_worst_decrease,
            lambda1_area,
            lambda1_area_rel_error_8pi,
            perelman: MonotoneSeries::new(perelman, PERELMAN_SLACK),
            variation,
            soliton_max_deviation,
            error: error.map(|e| e.to_string()),
        }
    }
}

/// `t, area, r_avg, R_min, R_max, lambda_1..lambda_k`.
pub fn trajectory_csv(traj: &SpectrumTrajectory) -> String {
    let k = traj.snapshots.first().map_or(0, |s| s.eigenpairs.len().saturating_sub(1));
    let mut out = String::from("t,area,r_avg,R_min,R_max");
    for j in 1..=k {
        write!(out, ",lambda_{j}").unwrap();
    }
    out.push('\n');
    for s in &traj.snapshots {
        write!(out, "{:?},{:?},{:?},{:?},{:?}", s.t, s.area, s.r_avg, s.r_min, s.r_max).unwrap();
        for p in &s.eigenpairs[1..] {
            write!(out, ",{:?}", p.lambda).unwrap();
        }
        out.push('\n');
    }
    out
}

/// `t, index, is_cluster, lambda, fd_rate, rhs_rate, rel_error, integ_res_1, integ_res_2, tracking_ok`.
pub fn variation_csv(report: &VariationReport) -> String {
    let mut out = String::from("t,index,is_cluster,lambda,fd_rate,rhs_rate,rel_error,integ_res_1,integ_res_2,tracking_ok\n");
    for r in &report.rows {
        writeln!(
            out,
            "{:?},{},{},{:?},{:?},{:?},{:?},{:?},{:?},{}",
            r.t, r.index, r.is_cluster, r.lambda, r.fd_rate, r.rhs_rate, r.rel_error, r.integ_res_1, r.integ_res_2, r.tracking_ok
        )
        .unwrap();
    }
    out
}

fn perelman_csv(traj: &SpectrumTrajectory, values: &[f64]) -> String {
    let mut out = String::from("t,perelman_lambda\n");
    for (s, v) in traj.snapshots.iter().zip(values) {
        writeln!(out, "{:?},{:?}", s.t, v).unwrap();
    }
    out
}

/// Writes the output files of a (possibly partial) run into `dir`.
pub fn write_outputs(dir: &Path, run: &ExperimentRun) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    if let Some(traj) = &run.trajectory {
        std::fs::write(dir.join("trajectory.csv"), trajectory_csv(traj))?;
        if !run.perelman.is_empty() {
            std::fs::write(dir.join("perelman.csv"), perelman_csv(traj, &run.perelman))?;
        }
    }
    std::fs::write(dir.join("variation.csv"), variation_csv(&run.report))?;
    let mut json = serde_json::to_string_pretty(&run.summary)?;
    json.push('\n');
    std::fs::write(dir.join("summary.json"), json)?;
    Ok(())
}
