use std::f64::consts::PI;
use std::sync::Arc;

use proptest::prelude::*;
use ricci_spectra::flow::{ConformalState, FlowConfig, FlowMode, RicciFlow};
use ricci_spectra::mesh::*;
use ricci_spectra::spectral::*;

fn sphere(k: u32) -> (Mesh, StiffnessOperator, MassOperator) {
    let mesh = build_icosphere(k, 1.0).unwrap();
    let l = assemble_stiffness(&mesh).unwrap();
    let m = assemble_mass(&mesh, &vec![0.0; mesh.vertex_count()]).unwrap();
    (mesh, l, m)
}

#[test]
fn torus_first_shell() {
    let mesh = build_flat_torus(32, 32, 1.0, 1.0).unwrap();
    let l = assemble_stiffness(&mesh).unwrap();
    let m = assemble_mass(&mesh, &vec![0.0; mesh.vertex_count()]).unwrap();
    let pairs = solve_spectrum(&l, &m, 3, DEFAULT_TOLERANCE).unwrap();
    let target = 4.0 * PI * PI;
    assert!((pairs[1].lambda - target).abs() / target < 0.01);
    assert!((pairs[2].lambda - pairs[1].lambda).abs() < 1e-8 * target);
}

#[test]
fn icosphere3_low_spectrum() {
    let (_, l, m) = sphere(3);
    let pairs = solve_spectrum(&l, &m, 4, DEFAULT_TOLERANCE).unwrap();
    for p in &pairs[1..4] {
        assert!((p.lambda - 2.0).abs() / 2.0 < 0.01);
    }
    assert!((pairs[4].lambda - 6.0).abs() / 6.0 < 0.02);
}

#[test]
fn eigenpair_contract() {
    let (_, l, m) = sphere(3);
    let pairs = solve_spectrum(&l, &m, 8, 1e-10).unwrap();
    assert_eq!(pairs.iter().map(|p| p.index).collect::<Vec<_>>(), (0..=8).collect::<Vec<_>>());
    assert!(pairs.windows(2).all(|w| w[0].lambda <= w[1].lambda));
    let ones = vec![1.0; m.dim()];
    for (i, p) in pairs.iter().enumerate() {
        let mf = m.apply(&p.f);
        let lf = l.apply(&p.f);
        let res: f64 = lf.iter().zip(&mf).map(|(a, b)| (a - p.lambda * b).powi(2)).sum::<f64>().sqrt();
        let norm: f64 = mf.iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!(res <= 1e-9 * p.lambda.max(1.0) * norm, "residual of pair {i}");
        if i >= 1 {
            assert!(m.inner(&p.f, &ones).abs() < 1e-8);
        }
        for q in &pairs {
            let g = m.inner(&p.f, &q.f);
            let expected = if p.index == q.index { 1.0 } else { 0.0 };
            assert!((g - expected).abs() < 1e-8, "gram ({}, {})", p.index, q.index);
        }
    }
}

#[test]
fn rayleigh_quotient_examples() {
    let (_, l, m) = sphere(2);
    let pairs = solve_spectrum(&l, &m, 5, DEFAULT_TOLERANCE).unwrap();
    assert!((rayleigh_quotient(&pairs[1].f, &l, &m).unwrap() - pairs[1].lambda).abs() < 1e-9);
    assert!(rayleigh_quotient(&vec![3.0; m.dim()], &l, &m).unwrap().abs() < 1e-12);
    let sum: Vec<f64> = pairs[1].f.iter().zip(&pairs[4].f).map(|(a, b)| a + b).collect();
    let expected = 0.5 * (pairs[1].lambda + pairs[4].lambda);
    assert!((rayleigh_quotient(&sum, &l, &m).unwrap() - expected).abs() < 1e-8);
    assert!(rayleigh_quotient(&vec![0.0; m.dim()], &l, &m).is_err());
}

#[test]
fn round_sphere_cluster_survives_tracking() {
    let mesh = Arc::new(build_icosphere(3, 1.0).unwrap());
    let flow = RicciFlow::new(mesh.clone()).unwrap();
    let cfg = FlowConfig { mode: FlowMode::Unnormalized, t_end: 0.02, spectrum_k: 8, ..Default::default() };
    let traj = flow.run(&ConformalState::round(mesh), &cfg).unwrap();
    for s in &traj.snapshots {
        assert!(s.tracking_ok());
        assert_eq!(s.cluster_of(1), vec![1, 2, 3]);
        assert_eq!(s.cluster_of(5), vec![4, 5, 6, 7, 8]);
    }
}

#[test]
fn solver_is_deterministic() {
    let (_, l, m) = sphere(3);
    let a = solve_spectrum(&l, &m, 6, DEFAULT_TOLERANCE).unwrap();
    let b = solve_spectrum(&l, &m, 6, DEFAULT_TOLERANCE).unwrap();
    assert_eq!(a, b);
}

#[test]
fn invalid_requests() {
    let (_, l, m) = sphere(0);
    assert!(solve_spectrum(&l, &m, 12, DEFAULT_TOLERANCE).is_err());
    assert!(solve_spectrum(&l, &m, 3, 1e-16).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn mass_scaling_divides_eigenvalues(c in 0.05f64..20.0) {
        let (_, l, m) = sphere(2);
        let base = solve_spectrum(&l, &m, 5, DEFAULT_TOLERANCE).unwrap();
        let scaled = solve_spectrum(&l, &m.scaled(c).unwrap(), 5, DEFAULT_TOLERANCE).unwrap();
        for (a, b) in base.iter().zip(&scaled).skip(1) {
            prop_assert!((b.lambda - a.lambda / c).abs() <= 1e-8 * a.lambda / c);
        }
    }

    #[test]
    fn min_max_lower_bound(coeffs in prop::collection::vec(-1.0f64..1.0, 8), u_scale in 0.0f64..0.5) {
        let mesh = build_icosphere(2, 1.0).unwrap();
        let l = assemble_stiffness(&mesh).unwrap();
        let u: Vec<f64> = mesh.vertices().iter().map(|p| u_scale * p[0] * p[2]).collect();
        let m = assemble_mass(&mesh, &u).unwrap();
        let lambda1 = solve_spectrum(&l, &m, 1, DEFAULT_TOLERANCE).unwrap()[1].lambda;
        let mut f: Vec<f64> = mesh.vertices().iter().enumerate()
            .map(|(i, p)| coeffs[0] * p[0] + coeffs[1] * p[1] + coeffs[2] * p[2] + coeffs[3] * p[0] * p[1]
                + coeffs[4] * p[1] * p[2] + coeffs[5] * (3.0 * p[0]).cos() + coeffs[6] * ((i % 7) as f64) + coeffs[7])
            .collect();
        let ones = vec![1.0; f.len()];
        let mean = m.inner(&f, &ones) / m.trace();
        f.iter_mut().for_each(|x| *x -= mean);
        prop_assume!(m.norm_sq(&f) > 1e-10);
        prop_assert!(rayleigh_quotient(&f, &l, &m).unwrap() >= lambda1 * (1.0 - 1e-9));
    }

    #[test]
    fn seeds_do_not_change_converged_values(seed in 0u64..1_000_000) {
        let (_, l, m) = sphere(2);
        let reference = SpectralSolver::default().solve(&l, &m, 4, None).unwrap();
        let other = SpectralSolver::new(SolverConfig { seed, ..Default::default() }).solve(&l, &m, 4, None).unwrap();
        for (a, b) in reference.iter().zip(&other) {
            prop_assert!((a.lambda - b.lambda).abs() <= 1e-9 * a.lambda.max(1.0));
        }
    }
}
