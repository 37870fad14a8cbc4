use std::f64::consts::PI;
use std::sync::Arc;

use ricci_spectra::flow::*;
use ricci_spectra::mesh::*;
use ricci_spectra::spectral::{Eigenpair, SpectralSolver, SpectrumSnapshot};
use ricci_spectra::variation::*;
use ricci_spectra::Error;

fn run(mesh: Arc<Mesh>, u: Vec<f64>, mode: FlowMode, t_end: f64, every: usize) -> SpectrumTrajectory {
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    let cfg = FlowConfig { mode, t_end, record_every: every, spectrum_k: 8, ..Default::default() };
    flow.run(&ConformalState::new(mesh, u, 0.0).unwrap(), &cfg).unwrap()
}

fn bumped(k: u32, amp: f64) -> (Arc<Mesh>, Vec<f64>) {
    let mesh = Arc::new(build_icosphere(k, 1.0).unwrap());
    let u = mesh.vertices().iter().map(|p| amp * (p[0] * p[1] + 0.5 * p[2] * p[2] - 0.3 * p[0])).collect();
    (mesh, u)
}

fn unit_area(mesh: &Mesh, mut u: Vec<f64>) -> Vec<f64> {
    let a = integrate(mesh, &u, &vec![1.0; u.len()]);
    u.iter_mut().for_each(|x| *x -= a.ln());
    u
}

#[test]
fn torus_rates_vanish() {
    let mesh = Arc::new(build_flat_torus(16, 16, 1.0, 1.0).unwrap());
    let traj = run(mesh.clone(), vec![0.0; 256], FlowMode::Unnormalized, 0.05, 10);
    let snap = &traj.snapshots[2];
    for p in &snap.eigenpairs[1..] {
        assert!(rhs_unnormalized_surface(&mesh, snap, p).unwrap().abs() < 1e-12);
        assert!(rhs_normalized_surface(&mesh, snap, p).unwrap().abs() < 1e-12);
        assert!(rhs_general_2d(&mesh, snap, p).unwrap().abs() < 1e-12);
    }
    for row in variation_report(&traj).unwrap().rows {
        assert!(row.fd_rate.abs() < 1e-10 && row.integ_res_1 < 1e-10 && row.integ_res_2 < 1e-10, "{row:?}");
    }
    let solver = SpectralSolver::default();
    assert!(perelman_lambda(&mesh, &traj.stiffness, snap, &solver).unwrap().abs() < 1e-10);
}

#[test]
fn round_sphere_rates() {
    let (mesh, u) = bumped(4, 0.0);
    let traj = run(mesh.clone(), u, FlowMode::Unnormalized, 0.02, 10);
    let snap = &traj.snapshots[0];
    let rhs = rhs_unnormalized_surface(&mesh, snap, &snap.eigenpairs[1]).unwrap();
    assert!((rhs - 4.0).abs() < 0.04, "{rhs}");
    let fd = finite_difference_rate(&traj, 1, &EigenTarget::Cluster(vec![1, 2, 3])).unwrap();
    let exact = 4.0 / (1.0 - 2.0 * traj.snapshots[1].t).powi(2);
    assert!((fd.rate - exact).abs() / exact < 0.01 && fd.reliable);

    let solver = SpectralSolver::default();
    let mu = perelman_lambda(&mesh, &traj.stiffness, snap, &solver).unwrap();
    assert!((mu - 2.0).abs() < 0.01, "{mu}");
}

#[test]
fn normalized_round_sphere_is_stationary() {
    let mesh = Arc::new(build_icosphere(3, 1.0).unwrap());
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    let relaxed = flow.relax(&ConformalState::round(mesh.clone()), 1e-12, 20.0).unwrap();
    let u = unit_area(&mesh, relaxed.u);
    let traj = run(mesh.clone(), u, FlowMode::Normalized, 0.03, 10);
    for row in variation_report(&traj).unwrap().rows {
        assert!(row.rhs_rate.abs() < 1e-9 && row.fd_rate.abs() < 1e-8, "{row:?}");
        assert!(row.integ_res_1 < 1e-8 && row.integ_res_2 < 1e-8, "{row:?}");
    }
}

#[test]
fn gauss_bonnet_form_of_normalized_rate() {
    let (mesh, u) = bumped(3, 0.2);
    let u = unit_area(&mesh, u);
    let traj = run(mesh.clone(), u, FlowMode::Normalized, 0.01, 5);
    for snap in &traj.snapshots {
        for p in &snap.eigenpairs[1..] {
            let a = rhs_normalized_surface(&mesh, snap, p).unwrap();
            let b = gauss_bonnet_normalized_form(&mesh, snap, p);
            // the only gap is the time-stepping drift of the unit area
            let drift = p.lambda * 8.0 * PI * (1.0 - 1.0 / snap.area);
            assert!((a - b - drift).abs() < 1e-10 * b.abs().max(1.0), "{a} vs {b}");
            assert!((snap.area - 1.0).abs() < 1e-9);
        }
    }
}

#[test]
fn general_formula_reduces_in_two_dimensions() {
    let (mesh, u) = bumped(3, 0.4);
    let traj = run(mesh.clone(), u, FlowMode::Unnormalized, 0.02, 10);
    for snap in &traj.snapshots {
        for p in &snap.eigenpairs[1..] {
            let a = rhs_unnormalized_surface(&mesh, snap, p).unwrap();
            let b = rhs_general_2d(&mesh, snap, p).unwrap();
            assert!((a - b).abs() <= 0.02 * a.abs().max(1e-12));
        }
    }
}

#[test]
fn perturbed_rates_match_finite_differences() {
    let (mesh, u) = bumped(3, 0.1);
    let traj = run(mesh, u, FlowMode::Unnormalized, 0.01, 1);
    let report = variation_report(&traj).unwrap();
    assert!(report.rows.iter().all(|r| r.tracking_ok));
    assert!(report.median_simple_rel_error().unwrap() < 0.05);
}

#[test]
fn rows_satisfy_relative_error_definition() {
    let (mesh, u) = bumped(2, 0.2);
    let traj = run(mesh, u, FlowMode::Unnormalized, 0.02, 2);
    for r in variation_report(&traj).unwrap().rows {
        let expected = (r.fd_rate - r.rhs_rate).abs() / r.fd_rate.abs().max(r.rhs_rate.abs()).max(1e-12);
        assert_eq!(r.rel_error, expected);
    }
}

fn synthetic(times: &[f64], lambdas: impl Fn(f64) -> f64) -> SpectrumTrajectory {
    let mesh = Arc::new(build_icosphere(0, 1.0).unwrap());
    let stiffness = Arc::new(assemble_stiffness(&mesh).unwrap());
    let snapshots = times
        .iter()
        .map(|&t| SpectrumSnapshot {
            t,
            eigenpairs: vec![
                Eigenpair { index: 0, lambda: 0.0, f: vec![0.0; 12] },
                Eigenpair { index: 1, lambda: lambdas(t), f: vec![0.0; 12] },
            ],
            area: 1.0,
            r_avg: 0.0,
            r_min: 0.0,
            r_max: 0.0,
            u: vec![0.0; 12],
            curvature: vec![0.0; 12],
            tracking_lost: vec![],
        })
        .collect();
    SpectrumTrajectory {
        snapshots,
        mode: FlowMode::Unnormalized,
        mesh,
        stiffness,
        record_interval: 0.25,
        stopping_reason: StopReason::EndTime,
        blowup_time_estimate: None,
        final_time: *times.last().unwrap(),
        final_area: 1.0,
    }
}

#[test]
fn central_difference_is_exact_on_affine_data() {
    let traj = synthetic(&[0.0, 0.25, 0.5, 0.75], |t| 3.0 - 2.5 * t);
    for i in 1..3 {
        let fd = finite_difference_rate(&traj, i, &EigenTarget::Index(1)).unwrap();
        assert_eq!(fd.rate, -2.5);
    }
    assert!(finite_difference_rate(&traj, 0, &EigenTarget::Index(1)).is_err());
    assert!(finite_difference_rate(&traj, 3, &EigenTarget::Index(1)).is_err());

    let uneven = synthetic(&[0.0, 0.25, 0.6], |t| t);
    assert!(matches!(finite_difference_rate(&uneven, 1, &EigenTarget::Index(1)), Err(Error::Input(_))));
}

#[test]
fn tracking_loss_marks_rate_unreliable() {
    let mut traj = synthetic(&[0.0, 0.25, 0.5], |t| 1.0 + t);
    traj.snapshots[2].tracking_lost = vec![1];
    let fd = finite_difference_rate(&traj, 1, &EigenTarget::Index(1)).unwrap();
    assert!(!fd.reliable);
}

#[test]
fn contracts_are_enforced() {
    let (mesh, u) = bumped(2, 0.0);
    let traj = run(mesh.clone(), u, FlowMode::Unnormalized, 0.02, 10);
    let snap = &traj.snapshots[1];
    // index 0 is not a variation branch
    assert!(matches!(rhs_unnormalized_surface(&mesh, snap, &snap.eigenpairs[0]), Err(Error::Contract(_))));
    let mut stretched = snap.eigenpairs[1].clone();
    stretched.f.iter_mut().for_each(|x| *x *= 1.001);
    assert!(matches!(rhs_normalized_surface(&mesh, snap, &stretched), Err(Error::Contract(_))));
    // members of the degenerate λ1 cluster have no canonical derivative
    assert!(matches!(integrability_residuals(&traj, 1, 2), Err(Error::Skipped(_))));
    assert!(cluster_integrability_residuals(&traj, 1, &[1, 2, 3]).is_ok());
}

#[test]
fn integrability_converges_quadratically() {
    let (mesh, u) = bumped(3, 0.1);
    let at = |every: usize| {
        let traj = run(mesh.clone(), u.clone(), FlowMode::Unnormalized, 0.04, every);
        let i = traj.snapshots.iter().position(|s| (s.t - 0.02).abs() < 1e-12).unwrap();
        integrability_residuals(&traj, i, 1).unwrap()
    };
    let (coarse, fine) = (at(10), at(5));
    // the mean-zero identity holds to roundoff; the normalization identity
    // carries the O(h²) central-difference error
    assert!(coarse.0 < 1e-12 && fine.0 < 1e-12);
    let r2 = coarse.1 / fine.1;
    assert!(r2 > 3.0 && r2 < 5.0, "{r2}");
}

#[test]
fn perelman_is_monotone_with_negative_curvature() {
    let (mesh, u) = bumped(3, 0.9);
    let traj = run(mesh, u, FlowMode::Unnormalized, 0.1, 10);
    assert!(traj.snapshots[0].r_min < 0.0);
    let mu = perelman_sequence(&traj, &SpectralSolver::default()).unwrap();
    assert!(worst_decrease(&mu) <= 1e-6, "{mu:?}");
}

#[test]
fn rate_bound_diagnostic() {
    let row = |lambda: f64, fd_rate: f64| VariationRow {
        t: 0.0,
        index: 1,
        is_cluster: false,
        cluster_size: 1,
        lambda,
        fd_rate,
        rhs_rate: fd_rate,
        rel_error: 0.0,
        integ_res_1: 0.0,
        integ_res_2: 0.0,
        tracking_ok: true,
    };
    assert!(rate_bound_check(&row(2.0, 4.0), 2, 1e-12));
    assert!(!rate_bound_check(&row(2.0, 4.1), 2, 1e-12));
    assert!(rate_bound_check(&row(4.0 * PI * PI, 0.0), 2, 0.0));
    assert!(rate_bound_check(&row(3.0, 12.0), 3, 1e-12));
}
