use std::f64::consts::PI;
use std::sync::Arc;

use ricci_spectra::flow::*;
use ricci_spectra::mesh::*;
use ricci_spectra::variation::StopReason;
use ricci_spectra::Error;

fn round(k: u32) -> (Arc<Mesh>, RicciFlow) {
    let mesh = Arc::new(build_icosphere(k, 1.0).unwrap());
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    (mesh, flow)
}

#[test]
fn torus_steps_are_fixed() {
    let mesh = Arc::new(build_flat_torus(10, 7, 1.0, 2.0).unwrap());
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    let s = ConformalState::round(mesh);
    for mode in [FlowMode::Unnormalized, FlowMode::Normalized] {
        let r = scalar_curvature(flow.mesh(), &s.u, flow.stiffness()).unwrap();
        for dt in [1e-4, flow.adaptive_dt(&s.u, &r, &FlowConfig::default())] {
            let worst = flow.step(&s, mode, dt).unwrap().u.iter().fold(0.0f64, |m, x| m.max(x.abs()));
            assert!(worst < 1e-12, "{worst}");
        }
    }
}

#[test]
fn uniform_shrinking_on_the_constant_curvature_sphere() {
    let (mesh, flow) = round(3);
    // discrete constant-curvature metric, then undo its small area change
    let relaxed = flow.relax(&ConformalState::round(mesh.clone()), 1e-12, 20.0).unwrap();
    let start = ConformalState::new(mesh, relaxed.u.clone(), 0.0).unwrap();
    let r0 = scalar_curvature(flow.mesh(), &start.u, flow.stiffness()).unwrap()[0];
    let mut s = start.clone();
    let dt = 1e-4;
    for _ in 0..500 {
        s = flow.step(&s, FlowMode::Unnormalized, dt).unwrap();
    }
    // exact solution: e^{u(t)} = e^{u0} (1 − r0 t)
    let factor = 1.0 - r0 * s.t;
    for (a, b) in s.u.iter().zip(&start.u) {
        assert!(((a - b).exp() - factor).abs() < 1e-10);
    }
}

#[test]
fn icosphere_shrinks_like_one_minus_two_t() {
    let (mesh, flow) = round(3);
    let mut s = ConformalState::round(mesh);
    for _ in 0..100 {
        s = flow.step(&s, FlowMode::Unnormalized, 1e-3).unwrap();
    }
    let worst = s.u.iter().map(|u| (u.exp() - (1.0 - 2.0 * s.t)).abs()).fold(0.0, f64::max);
    assert!(worst < 5e-3, "{worst}");
}

#[test]
fn normalized_flow_fixes_constant_curvature() {
    let (mesh, flow) = round(3);
    let relaxed = flow.relax(&ConformalState::round(mesh), 1e-12, 20.0).unwrap();
    let next = flow.step(&relaxed, FlowMode::Normalized, 1e-3).unwrap();
    assert!(next.u.iter().zip(&relaxed.u).all(|(a, b)| (a - b).abs() < 1e-11));
}

#[test]
fn unnormalized_run_reaches_extinction() {
    let (mesh, flow) = round(2);
    let cfg = FlowConfig { t_end: 1.0, record_every: 50, spectrum_k: 2, ..Default::default() };
    let traj = flow.run(&ConformalState::round(mesh), &cfg).unwrap();
    assert!(matches!(traj.stopping_reason, StopReason::AreaFloor | StopReason::CurvatureCap));
    let t = traj.blowup_time_estimate.unwrap();
    assert!((t - 0.5).abs() < 0.01, "{t}");
    let a0 = traj.snapshots[0].area;
    for s in &traj.snapshots {
        assert!((s.area - (a0 - 8.0 * PI * s.t)).abs() < 1e-3 * a0);
    }
}

#[test]
fn torus_run_is_steady() {
    let mesh = Arc::new(build_flat_torus(12, 12, 1.0, 1.0).unwrap());
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    let cfg = FlowConfig { t_end: 1.0, record_every: 100, spectrum_k: 4, ..Default::default() };
    let traj = flow.run(&ConformalState::round(mesh), &cfg).unwrap();
    assert_eq!(traj.stopping_reason, StopReason::EndTime);
    let first = traj.snapshots[0].lambdas();
    for s in &traj.snapshots {
        for (a, b) in s.lambdas().iter().zip(&first) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }
    for i in 1..traj.len() - 1 {
        assert!(scalar_curvature_evolution_residual(&traj, i).unwrap().iter().all(|r| r.abs() < 1e-12));
    }
}

#[test]
fn recording_times_are_uniform() {
    let (mesh, flow) = round(2);
    let cfg = FlowConfig { t_end: 0.05, record_every: 7, dt_init: 1e-3, spectrum_k: 1, ..Default::default() };
    let traj = flow.run(&ConformalState::round(mesh), &cfg).unwrap();
    for (i, s) in traj.snapshots.iter().enumerate() {
        assert!((s.t - i as f64 * 7e-3).abs() < 1e-12);
    }
    assert!(traj.central_spacing(0).is_err());
    assert!(traj.central_spacing(traj.len() - 1).is_err());
    assert!((traj.central_spacing(1).unwrap() - 7e-3).abs() < 1e-12);
}

#[test]
fn nonnegative_curvature_is_preserved() {
    let (mesh, flow) = round(3);
    let u: Vec<f64> = mesh.vertices().iter().map(|p| 0.05 * p[0] * p[1]).collect();
    let cfg = FlowConfig { t_end: 0.2, spectrum_k: 1, ..Default::default() };
    let traj = flow.run(&ConformalState::new(mesh, u, 0.0).unwrap(), &cfg).unwrap();
    assert!(traj.snapshots[0].r_min >= 0.0);
    assert!(traj.snapshots.iter().all(|s| s.r_min >= -1e-6));
}

#[test]
fn curvature_residual_shrinks_quadratically() {
    let (mesh, flow) = round(3);
    let u: Vec<f64> = mesh.vertices().iter().map(|p| 0.1 * (p[0] * p[1] + p[2])).collect();
    let start = ConformalState::new(mesh, u, 0.0).unwrap();
    let norm_at = |every: usize| {
        let cfg = FlowConfig { t_end: 0.04, record_every: every, spectrum_k: 1, ..Default::default() };
        let traj = flow.run(&start, &cfg).unwrap();
        let i = traj.snapshots.iter().position(|s| (s.t - 0.02).abs() < 1e-12).unwrap();
        scalar_curvature_evolution_residual(&traj, i).unwrap().iter().fold(0.0f64, |m, r| m.max(r.abs()))
    };
    let ratio = norm_at(10) / norm_at(5);
    assert!(ratio > 3.0 && ratio < 5.0, "{ratio}");
}

#[test]
fn invalid_config_fails_without_trajectory() {
    let (mesh, flow) = round(1);
    let cfg = FlowConfig { dt_init: -1.0, ..Default::default() };
    let failure = flow.run(&ConformalState::round(mesh), &cfg).unwrap_err();
    assert!(matches!(failure.error, Error::Input(_)));
    assert!(failure.partial.is_none());
}

#[test]
fn blow_up_in_a_step_is_reported() {
    let (mesh, flow) = round(2);
    let s = ConformalState::round(mesh);
    // an absurd step drives u to infinity
    match flow.step(&s, FlowMode::Unnormalized, 1e6) {
        Err(Error::BlowUp { .. }) => {}
        other => panic!("expected blow-up, got {other:?}"),
    }
}
