//! Eigenvalue variation along a recorded flow: right-hand sides of the
//! variation formulas, central-difference ground truth, integrability
//! residuals, and the lowest eigenvalue of `−4Δ + R`.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow::FlowMode;
use crate::mesh::{assemble_mass, integrate, Mesh, StiffnessOperator};
use crate::spectral::{cluster_groups, Eigenpair, SpectralSolver, SpectrumSnapshot};

/// Allowed deviation of `∫f² dμ` from 1 for the formula evaluators.
pub const NORMALIZATION_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StopReason {
    EndTime,
    AreaFloor,
    CurvatureCap,
    CurvatureConverged,
    BlowUp,
    SolverFailure,
}

#[derive(Debug, Clone)]
pub struct SpectrumTrajectory {
    pub snapshots: Vec<SpectrumSnapshot>,
    pub mode: FlowMode,
    pub mesh: Arc<Mesh>,
    pub stiffness: Arc<StiffnessOperator>,
    pub record_interval: f64,
    pub stopping_reason: StopReason,
    /// Extrapolated singular time when the run hit a blow-up threshold.
    pub blowup_time_estimate: Option<f64>,
    pub final_time: f64,
    pub final_area: f64,
}

impl SpectrumTrajectory {
    pub fn len(&self) -> usize {
        self.snapshots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.snapshots.is_empty()
    }

    pub fn times(&self) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.t).collect()
    }

    /// Half the distance between the neighbours of an interior snapshot,
    /// after checking the spacing is uniform.
    pub fn central_spacing(&self, t_index: usize) -> Result<f64> {
        if t_index == 0 || t_index + 1 >= self.snapshots.len() {
            return Err(Error::input(format!(
                "index {t_index} is not interior to a trajectory of {} snapshots",
                self.snapshots.len()
            )));
        }
        let h1 = self.snapshots[t_index].t - self.snapshots[t_index - 1].t;
        let h2 = self.snapshots[t_index + 1].t - self.snapshots[t_index].t;
        if !(h1 > 0.0 && h2 > 0.0) || (h1 - h2).abs() > 1e-9 * h1.max(h2) {
            return Err(Error::input(format!("non-uniform spacing around index {t_index}: {h1} vs {h2}")));
        }
        Ok(0.5 * (h1 + h2))
    }

    /// Series of one branch's eigenvalue.
    pub fn branch(&self, index: usize) -> Vec<f64> {
        self.snapshots.iter().map(|s| s.eigenpairs[index].lambda).collect()
    }
}

fn check_pair(mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> Result<()> {
    if pair.index == 0 {
        return Err(Error::contract("variation formulas apply to nonconstant eigenpairs (index >= 1)"));
    }
    let norm = integrate(mesh, &snapshot.u, &pair.f.iter().map(|x| x * x).collect::<Vec<_>>());
    if (norm - 1.0).abs() > NORMALIZATION_TOL {
        return Err(Error::contract(format!("eigenfunction {} has ∫f² dμ = {norm}, expected 1", pair.index)));
    }
    Ok(())
}

fn weighted_square_integral(mesh: &Mesh, snapshot: &SpectrumSnapshot, f: &[f64]) -> f64 {
    let field: Vec<f64> = f.iter().zip(&snapshot.curvature).map(|(fi, r)| fi * fi * r).collect();
    integrate(mesh, &snapshot.u, &field)
}

/// `λ ∫ f² R dμ`: the eigenvalue rate under the unnormalized flow on a surface.
pub fn rhs_unnormalized_surface(mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> Result<f64> {
    check_pair(mesh, snapshot, pair)?;
    Ok(pair.lambda * weighted_square_integral(mesh, snapshot, &pair.f))
}

/// `−r λ + λ ∫ f² R dμ`: the rate under the normalized flow, which equals
/// `λ ∫ R (f² − 1) dμ` at unit area.
pub fn rhs_normalized_surface(mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> Result<f64> {
    check_pair(mesh, snapshot, pair)?;
    Ok(-snapshot.r_avg * pair.lambda + pair.lambda * weighted_square_integral(mesh, snapshot, &pair.f))
}

/// The general-dimension rate
/// `λ∫f²R dμ − ∫R|∇f|² dμ + 2∫Ric(∇f,∇f) dμ`, with `Ric = (R/2) g` on each
/// face and piecewise-linear gradients. The last two terms cancel in 2D.
pub fn rhs_general_2d(mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> Result<f64> {
    check_pair(mesh, snapshot, pair)?;
    let (mut scalar_term, mut ricci_term) = (0.0, 0.0);
    for (fi, face) in mesh.faces().iter().enumerate() {
        let u_bar = face.iter().map(|&v| snapshot.u[v]).sum::<f64>() / 3.0;
        let r_bar = face.iter().map(|&v| snapshot.curvature[v]).sum::<f64>() / 3.0;
        let conformal = u_bar.exp();
        let dmu = conformal * mesh.face_areas()[fi];
        // |∇f|_g² = e^{-u} |∇f|_0²
        let grad_sq = mesh.face_gradient_norm_sq(fi, &pair.f) / conformal;
        let ric = 0.5 * r_bar; // Ric = (R/2) g
        scalar_term += r_bar * grad_sq * dmu;
        ricci_term += ric * grad_sq * dmu;
    }
    Ok(pair.lambda * weighted_square_integral(mesh, snapshot, &pair.f) - scalar_term + 2.0 * ricci_term)
}

/// The rate appropriate to the flow mode.
pub fn rhs_surface(mode: FlowMode, mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> Result<f64> {
    match mode {
        FlowMode::Unnormalized => rhs_unnormalized_surface(mesh, snapshot, pair),
        FlowMode::Normalized => rhs_normalized_surface(mesh, snapshot, pair),
    }
}

/// A branch position or a set of positions averaged as a cluster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum EigenTarget {
    Index(usize),
    Cluster(Vec<usize>),
}

impl EigenTarget {
    fn positions(&self) -> Vec<usize> {
        match self {
            EigenTarget::Index(i) => vec![*i],
            EigenTarget::Cluster(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FdRate {
    pub rate: f64,
    /// False when tracking was lost for the branch at a neighbour.
    pub reliable: bool,
}

/// `(λ(t+h) − λ(t−h)) / 2h`, applied to the cluster mean for clusters.
pub fn finite_difference_rate(traj: &SpectrumTrajectory, t_index: usize, target: &EigenTarget) -> Result<FdRate> {
    let h = traj.central_spacing(t_index)?;
    let positions = target.positions();
    if positions.is_empty() {
        return Err(Error::input("empty eigen target"));
    }
    let n = traj.snapshots[t_index].eigenpairs.len();
    if let Some(&p) = positions.iter().find(|&&p| p >= n) {
        return Err(Error::input(format!("eigen index {p} out of range ({n} tracked)")));
    }
    let mean = |s: &SpectrumSnapshot| positions.iter().map(|&p| s.eigenpairs[p].lambda).sum::<f64>() / positions.len() as f64;
    let (before, after) = (&traj.snapshots[t_index - 1], &traj.snapshots[t_index + 1]);
    let reliable = [before, &traj.snapshots[t_index], after]
        .iter()
        .all(|s| positions.iter().all(|p| !s.tracking_lost.contains(p)));
    Ok(FdRate { rate: (mean(after) - mean(before)) / (2.0 * h), reliable })
}

fn neighbour_derivatives(traj: &SpectrumTrajectory, t_index: usize, positions: &[usize]) -> Result<Vec<Vec<f64>>> {
    let h = traj.central_spacing(t_index)?;
    let centre = &traj.snapshots[t_index];
    let mass = assemble_mass(&traj.mesh, &centre.u)?;
    let basis = |s: &SpectrumSnapshot| positions.iter().map(|&p| s.eigenpairs[p].f.clone()).collect::<Vec<_>>();
    let c = basis(centre);
    let aligned = |s: &SpectrumSnapshot| -> Vec<Vec<f64>> {
        let b = basis(s);
        if b.len() == 1 {
            return b;
        }
        // orthogonal Procrustes: rotate b onto c in the M inner product
        let k = b.len();
        let p = DMatrix::from_fn(k, k, |i, j| mass.inner(&b[i], &c[j]));
        let svd = p.svd(true, true);
        let rot = svd.u.unwrap() * svd.v_t.unwrap();
        (0..k)
            .map(|j| {
                let mut v = vec![0.0; b[0].len()];
                for (i, bi) in b.iter().enumerate() {
                    let w = rot[(i, j)];
                    v.iter_mut().zip(bi).for_each(|(o, x)| *o += w * x);
                }
                v
            })
            .collect()
    };
    let plus = aligned(&traj.snapshots[t_index + 1]);
    let minus = aligned(&traj.snapshots[t_index - 1]);
    Ok(plus
        .iter()
        .zip(&minus)
        .map(|(p, m)| p.iter().zip(m).map(|(a, b)| (a - b) / (2.0 * h)).collect())
        .collect())
}

/// Integrability residuals of a simple eigenvalue at an interior snapshot:
/// `|∫f′ dμ − ∫fR dμ|` and, unnormalized, `|∫f′f dμ − ½∫f²R dμ|`, or
/// normalized, `|2∫ff′ dμ − ∫f²R dμ + r|`. `f′` is a central difference
/// of the tracked, sign-aligned eigenfunctions.
pub fn integrability_residuals(traj: &SpectrumTrajectory, t_index: usize, eigen_index: usize) -> Result<(f64, f64)> {
    let centre = traj
        .snapshots
        .get(t_index)
        .ok_or_else(|| Error::input(format!("snapshot {t_index} out of range")))?;
    if eigen_index == 0 || eigen_index >= centre.eigenpairs.len() {
        return Err(Error::input(format!("eigen index {eigen_index} is not a tracked nonconstant branch")));
    }
    if centre.cluster_of(eigen_index).len() > 1 {
        return Err(Error::Skipped(format!(
            "eigenvalue {eigen_index} belongs to a cluster; its derivative has no canonical gauge"
        )));
    }
    let (r1, r2) = member_residuals(traj, t_index, &[eigen_index])?;
    Ok((r1[0].abs(), r2[0].abs()))
}

/// Gauge-invariant integrability residuals of a cluster: neighbour bases
/// are Procrustes-aligned to the centre basis, the first residual is the
/// Euclidean norm over members and the second is summed over members.
pub fn cluster_integrability_residuals(
    traj: &SpectrumTrajectory,
    t_index: usize,
    positions: &[usize],
) -> Result<(f64, f64)> {
    if positions.is_empty() || positions.contains(&0) {
        return Err(Error::input("cluster must be a nonempty set of nonconstant branches"));
    }
    let (r1, r2) = member_residuals(traj, t_index, positions)?;
    Ok((r1.iter().map(|x| x * x).sum::<f64>().sqrt(), r2.iter().sum::<f64>().abs()))
}

fn member_residuals(traj: &SpectrumTrajectory, t_index: usize, positions: &[usize]) -> Result<(Vec<f64>, Vec<f64>)> {
    let derivs = neighbour_derivatives(traj, t_index, positions)?;
    let centre = &traj.snapshots[t_index];
    let mesh = &traj.mesh;
    let integral = |field: Vec<f64>| integrate(mesh, &centre.u, &field);
    let mut first = Vec::with_capacity(positions.len());
    let mut second = Vec::with_capacity(positions.len());
    for (&p, fp) in positions.iter().zip(&derivs) {
        let f = &centre.eigenpairs[p].f;
        let r = &centre.curvature;
        let int_fp = integral(fp.clone());
        let int_fr = integral(f.iter().zip(r).map(|(a, b)| a * b).collect());
        let int_ffp = integral(f.iter().zip(fp).map(|(a, b)| a * b).collect());
        let int_ffr = integral(f.iter().zip(r).map(|(a, b)| a * a * b).collect());
        first.push(int_fp - int_fr);
        second.push(match traj.mode {
            FlowMode::Unnormalized => int_ffp - 0.5 * int_ffr,
            FlowMode::Normalized => 2.0 * int_ffp - int_ffr + centre.r_avg,
        });
    }
    Ok((first, second))
}

/// Lowest eigenvalue of the discrete `−4Δ + R`, i.e. of the pencil
/// `(4L + M diag(R)) f = μ M f`.
pub fn perelman_lambda(
    mesh: &Mesh,
    stiffness: &StiffnessOperator,
    snapshot: &SpectrumSnapshot,
    solver: &SpectralSolver,
) -> Result<f64> {
    perelman_eigenpair(mesh, stiffness, snapshot, solver, None).map(|(mu, _)| mu)
}

/// [`perelman_lambda`] with its eigenfunction, optionally warm-started.
pub fn perelman_eigenpair(
    mesh: &Mesh,
    stiffness: &StiffnessOperator,
    snapshot: &SpectrumSnapshot,
    solver: &SpectralSolver,
    guess: Option<&[f64]>,
) -> Result<(f64, Vec<f64>)> {
    let mass = assemble_mass(mesh, &snapshot.u)?;
    let potential: Vec<f64> = mass.diagonal().iter().zip(&snapshot.curvature).map(|(m, r)| m * r).collect();
    let operator = stiffness.matrix().scaled_plus_diagonal(4.0, &potential);
    let lower = snapshot.curvature.iter().copied().fold(f64::INFINITY, f64::min);
    let guess = guess.map(|g| vec![g.to_vec()]);
    let mut sol = solver.solve_pencil(&operator, &mass, 1, lower, false, guess.as_deref())?;
    Ok((sol.values[0], sol.vectors.swap_remove(0)))
}

/// Perelman's functional along a trajectory, warm-starting each solve.
pub fn perelman_sequence(traj: &SpectrumTrajectory, solver: &SpectralSolver) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(traj.len());
    let mut prev: Option<Vec<f64>> = None;
    for snap in &traj.snapshots {
        let (mu, f) = perelman_eigenpair(&traj.mesh, &traj.stiffness, snap, solver, prev.as_deref())?;
        out.push(mu);
        prev = Some(f);
    }
    Ok(out)
}

/// Largest drop `x[i−1] − x[i]` of a sequence (0 when nondecreasing).
pub fn worst_decrease(values: &[f64]) -> f64 {
    values.windows(2).map(|w| w[0] - w[1]).fold(0.0, f64::max)
}

/// `2 (n − 1) / n · λ²`.
pub fn rate_bound(lambda: f64, n: usize) -> f64 {
    2.0 * (n as f64 - 1.0) / n as f64 * lambda * lambda
}

/// True iff the row's finite-difference rate respects the homogeneous
/// rate bound `dλ/dt ≤ 2(n−1)/n λ²` up to `tol`.
pub fn rate_bound_check(row: &VariationRow, n: usize, tol: f64) -> bool {
    row.fd_rate <= rate_bound(row.lambda, n) + tol
}

pub fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-12)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VariationRow {
    pub t: f64,
    /// Branch position, or the first position of a cluster.
    pub index: usize,
    pub is_cluster: bool,
    pub cluster_size: usize,
    pub lambda: f64,
    pub fd_rate: f64,
    pub rhs_rate: f64,
    pub rel_error: f64,
    pub integ_res_1: f64,
    pub integ_res_2: f64,
    pub tracking_ok: bool,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
pub struct VariationReport {
    pub rows: Vec<VariationRow>,
}

impl VariationReport {
    /// Median relative error over reliable, simple-eigenvalue rows.
    pub fn median_simple_rel_error(&self) -> Option<f64> {
        let mut errs: Vec<f64> =
            self.rows.iter().filter(|r| !r.is_cluster && r.tracking_ok).map(|r| r.rel_error).collect();
        if errs.is_empty() {
            return None;
        }
        errs.sort_by(f64::total_cmp);
        let n = errs.len();
        Some(if n % 2 == 1 { errs[n / 2] } else { 0.5 * (errs[n / 2 - 1] + errs[n / 2]) })
    }
}

/// Compares central-difference rates with the mode-appropriate right-hand
/// side at every interior snapshot, one row per simple eigenvalue or cluster.
pub fn variation_report(traj: &SpectrumTrajectory) -> Result<VariationReport> {
    let mut rows = Vec::new();
    for t_index in 1..traj.snapshots.len().saturating_sub(1) {
        if traj.central_spacing(t_index).is_err() {
            continue;
        }
        let snap = &traj.snapshots[t_index];
        for group in cluster_groups(&snap.lambdas()) {
            if group.contains(&0) {
                continue;
            }
            let is_cluster = group.len() > 1;
            let target = if is_cluster { EigenTarget::Cluster(group.clone()) } else { EigenTarget::Index(group[0]) };
            let fd = finite_difference_rate(traj, t_index, &target)?;
            let mut rhs = 0.0;
            for &p in &group {
                rhs += rhs_surface(traj.mode, &traj.mesh, snap, &snap.eigenpairs[p])?;
            }
            rhs /= group.len() as f64;
            let (integ_res_1, integ_res_2) = if is_cluster {
                cluster_integrability_residuals(traj, t_index, &group)?
            } else {
                integrability_residuals(traj, t_index, group[0])?
            };
            let lambda = group.iter().map(|&p| snap.eigenpairs[p].lambda).sum::<f64>() / group.len() as f64;
            rows.push(VariationRow {
                t: snap.t,
                index: group[0],
                is_cluster,
                cluster_size: group.len(),
                lambda,
                fd_rate: fd.rate,
                rhs_rate: rhs,
                rel_error: relative_error(fd.rate, rhs),
                integ_res_1,
                integ_res_2,
                tracking_ok: fd.reliable,
            });
        }
    }
    Ok(VariationReport { rows })
}

/// `λ ∫ f² R dμ − 4πχ λ`: the normalized rate written through Gauss–Bonnet
/// (valid at unit area).
pub fn gauss_bonnet_normalized_form(mesh: &Mesh, snapshot: &SpectrumSnapshot, pair: &Eigenpair) -> f64 {
    let chi = mesh.euler_characteristic() as f64;
    pair.lambda * weighted_square_integral(mesh, snapshot, &pair.f) - 4.0 * PI * chi * pair.lambda
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn relative_error_floor() {
        assert_eq!(relative_error(0.0, 0.0), 0.0);
        assert!((relative_error(1.0, 1.1) - 0.1 / 1.1).abs() < 1e-15);
    }

    #[test]
    fn bound_values() {
        assert!((rate_bound(2.0, 2) - 4.0).abs() < 1e-15);
        assert!((rate_bound(3.0, 3) - 12.0).abs() < 1e-15);
    }
}
