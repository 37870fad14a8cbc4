//! Two-dimensional Ricci flow as an ODE for the conformal factor.
//!
//! On a surface `Ric = (R/2) g`, so `∂g/∂t = −2 Ric` keeps `g(t) = e^{u(t)} g0`
//! in the conformal class of `g0` with `∂u/∂t = −R`. The volume-preserving
//! flow `∂g/∂t = r g − 2 Ric` becomes `∂u/∂t = r − R`.

use std::f64::consts::PI;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{assemble_mass, assemble_stiffness, integrate, scalar_curvature, Mesh, StiffnessOperator};
use crate::spectral::{track, SolverConfig, SpectralSolver, SpectrumSnapshot};
use crate::variation::{StopReason, SpectrumTrajectory};

/// RK4 is stable on the negative real axis up to about 2.78.
const RK4_REAL_STABILITY: f64 = 2.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FlowMode {
    Unnormalized,
    Normalized,
}

#[derive(Debug, Clone)]
pub struct FlowConfig {
    pub mode: FlowMode,
    pub dt_init: f64,
    pub t_end: f64,
    pub cfl_safety: f64,
    pub curvature_cap: f64,
    /// Stop when the area drops below this; defaults to `1e-6 · A(0)`.
    pub area_floor: Option<f64>,
    pub spectrum_k: usize,
    /// Snapshots are recorded every `record_every · dt_init` units of time.
    pub record_every: usize,
    /// Stop once `R_max − R_min` falls below this at a recorded time.
    pub curvature_spread_tol: Option<f64>,
    pub solver: SolverConfig,
}

impl Default for FlowConfig {
    fn default() -> Self {
        FlowConfig {
            mode: FlowMode::Unnormalized,
            dt_init: 1e-3,
            t_end: 0.1,
            cfl_safety: 0.5,
            curvature_cap: 1e4,
            area_floor: None,
            spectrum_k: 6,
            record_every: 10,
            curvature_spread_tol: None,
            solver: SolverConfig::default(),
        }
    }
}

impl FlowConfig {
    pub fn record_interval(&self) -> f64 {
        self.dt_init * self.record_every as f64
    }

    pub fn validate(&self) -> Result<()> {
        let positive = |name: &str, v: f64| {
            if v.is_finite() && v > 0.0 {
                Ok(())
            } else {
                Err(Error::input(format!("{name} must be positive, got {v}")))
            }
        };
        positive("dt_init", self.dt_init)?;
        positive("t_end", self.t_end)?;
        positive("curvature_cap", self.curvature_cap)?;
        if !(self.cfl_safety > 0.0 && self.cfl_safety <= 1.0) {
            return Err(Error::input(format!("cfl_safety must lie in (0, 1], got {}", self.cfl_safety)));
        }
        if let Some(a) = self.area_floor {
            positive("area_floor", a)?;
        }
        if let Some(s) = self.curvature_spread_tol {
            positive("curvature_spread_tol", s)?;
        }
        if self.spectrum_k == 0 || self.record_every == 0 {
            return Err(Error::input("spectrum_k and record_every must be at least 1"));
        }
        Ok(())
    }
}

/// `g(t) = e^u g0` at time `t`.
#[derive(Debug, Clone)]
pub struct ConformalState {
    pub u: Vec<f64>,
    pub t: f64,
    pub mesh: Arc<Mesh>,
}

impl ConformalState {
    pub fn new(mesh: Arc<Mesh>, u: Vec<f64>, t: f64) -> Result<Self> {
        if u.len() != mesh.vertex_count() {
            return Err(Error::input(format!("u has {} entries for {} vertices", u.len(), mesh.vertex_count())));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(Error::input("u must be finite"));
        }
        Ok(ConformalState { u, t, mesh })
    }

    pub fn round(mesh: Arc<Mesh>) -> Self {
        let n = mesh.vertex_count();
        ConformalState { u: vec![0.0; n], t: 0.0, mesh }
    }

    pub fn area(&self) -> f64 {
        self.mesh.base_vertex_area().iter().zip(&self.u).map(|(a, u)| a * u.exp()).sum()
    }
}

/// A mesh together with its (time-independent) stiffness matrix.
#[derive(Debug, Clone)]
pub struct RicciFlow {
    mesh: Arc<Mesh>,
    stiffness: Arc<StiffnessOperator>,
    diag_over_area: Vec<f64>,
}

impl RicciFlow {
    pub fn new(mesh: Arc<Mesh>) -> Result<Self> {
        let stiffness = Arc::new(assemble_stiffness(&mesh)?);
        Ok(Self::with_stiffness(mesh, stiffness))
    }

    pub fn with_stiffness(mesh: Arc<Mesh>, stiffness: Arc<StiffnessOperator>) -> Self {
        let diag_over_area = stiffness
            .matrix()
            .diagonal()
            .iter()
            .zip(mesh.base_vertex_area())
            .map(|(d, a)| d / a)
            .collect();
        RicciFlow { mesh, stiffness, diag_over_area }
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn stiffness(&self) -> &Arc<StiffnessOperator> {
        &self.stiffness
    }

    /// `du/dt` for the given mode.
    pub fn velocity(&self, u: &[f64], mode: FlowMode) -> Result<Vec<f64>> {
        let r = scalar_curvature(&self.mesh, u, &self.stiffness)?;
        Ok(match mode {
            FlowMode::Unnormalized => r.into_iter().map(|x| -x).collect(),
            FlowMode::Normalized => {
                let avg = integrate(&self.mesh, u, &r) / area_of(&self.mesh, u);
                r.into_iter().map(|x| avg - x).collect()
            }
        })
    }

    /// One classical RK4 step. On failure the caller's `state` is untouched
    /// and remains the last valid state.
    pub fn step(&self, state: &ConformalState, mode: FlowMode, dt: f64) -> Result<ConformalState> {
        if !(dt.is_finite() && dt > 0.0) {
            return Err(Error::input(format!("time step must be positive, got {dt}")));
        }
        let blow_up = |e: Error| Error::BlowUp { t: state.t, reason: e.to_string() };
        let u = &state.u;
        let axpy = |k: &[f64], h: f64| -> Vec<f64> { u.iter().zip(k).map(|(a, b)| a + h * b).collect() };

        let k1 = self.velocity(u, mode).map_err(blow_up)?;
        let k2 = self.velocity(&axpy(&k1, 0.5 * dt), mode).map_err(blow_up)?;
        let k3 = self.velocity(&axpy(&k2, 0.5 * dt), mode).map_err(blow_up)?;
        let k4 = self.velocity(&axpy(&k3, dt), mode).map_err(blow_up)?;
        let next: Vec<f64> = (0..u.len())
            .map(|i| u[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect();
        if let Some(i) = next.iter().position(|x| !x.is_finite()) {
            return Err(Error::BlowUp { t: state.t + dt, reason: format!("u is not finite at vertex {i}") });
        }
        Ok(ConformalState { u: next, t: state.t + dt, mesh: state.mesh.clone() })
    }

    /// Largest stable step for the state: curvature-controlled
    /// `cfl / max(|R|, 1)`, the diffusion bound from a Gershgorin estimate
    /// of the spectral radius of `M(u)^{-1} L`, and `dt_init`.
    pub fn adaptive_dt(&self, u: &[f64], curvature: &[f64], cfg: &FlowConfig) -> f64 {
        let r_abs = curvature.iter().fold(1.0f64, |m, r| m.max(r.abs()));
        let rho = self
            .diag_over_area
            .iter()
            .zip(u)
            .fold(0.0f64, |m, (d, ui)| m.max(2.0 * d * (-ui).exp()));
        let stability = if rho > 0.0 { RK4_REAL_STABILITY / rho } else { f64::INFINITY };
        cfg.dt_init.min(cfg.cfl_safety / r_abs).min(cfg.cfl_safety * stability)
    }

    /// Solves the spectrum at `state` and assembles a snapshot, tracking
    /// against `prev` when given.
    pub fn snapshot(
        &self,
        state: &ConformalState,
        k: usize,
        solver: &SpectralSolver,
        prev: Option<&SpectrumSnapshot>,
    ) -> Result<SpectrumSnapshot> {
        let mass = assemble_mass(&self.mesh, &state.u)?;
        let curvature = scalar_curvature(&self.mesh, &state.u, &self.stiffness)?;
        let guess: Option<Vec<Vec<f64>>> =
            prev.map(|p| p.eigenpairs.iter().skip(1).map(|e| e.f.clone()).collect());
        let raw = solver.solve(&self.stiffness, &mass, k, guess.as_deref())?;

        let area = mass.trace();
        let (r_min, r_max) = curvature.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &r| (lo.min(r), hi.max(r)));
        let r_avg = integrate(&self.mesh, &state.u, &curvature) / area;
        let mut snap = SpectrumSnapshot {
            t: state.t,
            eigenpairs: raw,
            area,
            r_avg,
            r_min,
            r_max,
            u: state.u.clone(),
            curvature,
            tracking_lost: vec![],
        };
        if let Some(p) = prev {
            let tracked = track(p, std::mem::take(&mut snap.eigenpairs), &mass)?;
            snap.eigenpairs = tracked.pairs;
            snap.tracking_lost = tracked.lost;
        }
        Ok(snap)
    }

    /// Integrates from `initial` to `cfg.t_end` (or a stopping condition),
    /// recording a tracked spectrum snapshot at uniformly spaced times.
    pub fn run(&self, initial: &ConformalState, cfg: &FlowConfig) -> Result<SpectrumTrajectory, Box<RunFailure>> {
        let fail = |error: Error, partial: Option<SpectrumTrajectory>| Box::new(RunFailure { error, partial });
        cfg.validate().map_err(|e| fail(e, None))?;
        if !Arc::ptr_eq(&initial.mesh, &self.mesh) && initial.mesh.vertex_count() != self.mesh.vertex_count() {
            return Err(fail(Error::input("initial state lives on a different mesh"), None));
        }

        let solver = SpectralSolver::new(cfg.solver.clone());
        let h = cfg.record_interval();
        let t0 = initial.t;
        let initial_area = initial.area();
        let area_floor = cfg.area_floor.unwrap_or(1e-6 * initial_area);

        let mut traj = SpectrumTrajectory {
            snapshots: Vec::new(),
            mode: cfg.mode,
            mesh: self.mesh.clone(),
            stiffness: self.stiffness.clone(),
            record_interval: h,
            stopping_reason: StopReason::EndTime,
            blowup_time_estimate: None,
            final_time: t0,
            final_area: initial_area,
        };

        let first = self.snapshot(initial, cfg.spectrum_k, &solver, None).map_err(|e| fail(e, None))?;
        traj.snapshots.push(first);

        let mut state = initial.clone();
        let mut record = 0usize;
        'outer: loop {
            record += 1;
            let t_next = t0 + record as f64 * h;
            loop {
                let curvature = match scalar_curvature(&self.mesh, &state.u, &self.stiffness) {
                    Ok(c) => c,
                    Err(e) => return Err(fail(e, Some(traj))),
                };
                let r_max_abs = curvature.iter().fold(0.0f64, |m, r| m.max(r.abs()));
                let area = state.area();
                let stop = if area < area_floor {
                    Some(StopReason::AreaFloor)
                } else if r_max_abs > cfg.curvature_cap {
                    Some(StopReason::CurvatureCap)
                } else {
                    None
                };
                if let Some(reason) = stop {
                    traj.stopping_reason = reason;
                    traj.blowup_time_estimate = Some(self.extinction_estimate(&state, area, r_max_abs, cfg.mode));
                    break 'outer;
                }

                let remaining = t_next - state.t;
                if remaining <= 1e-12 * h {
                    break;
                }
                let dt_max = self.adaptive_dt(&state.u, &curvature, cfg);
                let substeps = (remaining / dt_max - 1e-9).ceil().max(1.0);
                let dt = remaining / substeps;
                match self.step(&state, cfg.mode, dt) {
                    Ok(mut next) => {
                        if substeps == 1.0 {
                            next.t = t_next;
                        }
                        state = next;
                    }
                    Err(e) => {
                        traj.stopping_reason = StopReason::BlowUp;
                        traj.blowup_time_estimate = Some(state.t);
                        traj.final_time = state.t;
                        traj.final_area = state.area();
                        return Err(fail(e, Some(traj)));
                    }
                }
            }

            let prev = traj.snapshots.last();
            let snap = match self.snapshot(&state, cfg.spectrum_k, &solver, prev) {
                Ok(s) => s,
                Err(e) => {
                    traj.stopping_reason = StopReason::SolverFailure;
                    traj.final_time = state.t;
                    traj.final_area = state.area();
                    return Err(fail(e, Some(traj)));
                }
            };
            let spread = snap.r_max - snap.r_min;
            traj.snapshots.push(snap);
            if let Some(tol) = cfg.curvature_spread_tol {
                if spread < tol {
                    traj.stopping_reason = StopReason::CurvatureConverged;
                    break;
                }
            }
            if t_next >= t0 + cfg.t_end - 1e-9 * h {
                traj.stopping_reason = StopReason::EndTime;
                break;
            }
        }
        traj.final_time = state.t;
        traj.final_area = state.area();
        Ok(traj)
    }

    /// Steps the normalized flow without spectral work until
    /// `R_max − R_min < spread_tol`. On an icosphere this yields the discrete
    /// metric of constant curvature in the conformal class of `g0`, an exact
    /// fixed point of the discrete normalized flow.
    pub fn relax(&self, initial: &ConformalState, spread_tol: f64, max_time: f64) -> Result<ConformalState> {
        let cfg = FlowConfig { mode: FlowMode::Normalized, dt_init: 1e-2, ..Default::default() };
        let mut state = initial.clone();
        loop {
            let r = scalar_curvature(&self.mesh, &state.u, &self.stiffness)?;
            let (lo, hi) = r.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &x| (a.min(x), b.max(x)));
            if hi - lo < spread_tol {
                return Ok(state);
            }
            if state.t - initial.t >= max_time {
                return Err(Error::SolverDiverged { iterations: 0, best_residual: hi - lo });
            }
            let dt = self.adaptive_dt(&state.u, &r, &cfg);
            state = self.step(&state, FlowMode::Normalized, dt)?;
        }
    }

    /// Under the unnormalized flow `dA/dt = −4πχ`, so for `χ > 0` the area
    /// extrapolates to zero at `t + A / (4πχ)`. Otherwise `R ~ 1/(T − t)`.
    fn extinction_estimate(&self, state: &ConformalState, area: f64, r_max_abs: f64, mode: FlowMode) -> f64 {
        let chi = self.mesh.euler_characteristic();
        if mode == FlowMode::Unnormalized && chi > 0 {
            state.t + area / (4.0 * PI * chi as f64)
        } else {
            state.t + 1.0 / r_max_abs.max(f64::MIN_POSITIVE)
        }
    }
}

/// A run that stopped on an error, with whatever trajectory was recorded.
#[derive(Debug)]
pub struct RunFailure {
    pub error: Error,
    pub partial: Option<SpectrumTrajectory>,
}

impl std::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.error)
    }
}

impl std::error::Error for RunFailure {}

fn area_of(mesh: &Mesh, u: &[f64]) -> f64 {
    mesh.base_vertex_area().iter().zip(u).map(|(a, x)| a * x.exp()).sum()
}

/// `(R(t+h) − R(t−h)) / 2h − (Δ_g R + R²)` per vertex at an interior
/// snapshot, with `Δ_g = −M(u)^{-1} L`. Vanishes on exact solutions of the
/// unnormalized flow.
pub fn scalar_curvature_evolution_residual(traj: &SpectrumTrajectory, t_index: usize) -> Result<Vec<f64>> {
    let h = traj.central_spacing(t_index)?;
    let (before, at, after) = (&traj.snapshots[t_index - 1], &traj.snapshots[t_index], &traj.snapshots[t_index + 1]);
    let lr = traj.stiffness.apply(&at.curvature);
    let areas = traj.mesh.base_vertex_area();
    Ok((0..at.curvature.len())
        .map(|i| {
            let dr_dt = (after.curvature[i] - before.curvature[i]) / (2.0 * h);
            let lap = -lr[i] / (areas[i] * at.u[i].exp());
            dr_dt - (lap + at.curvature[i].powi(2))
        })
        .collect())
}
