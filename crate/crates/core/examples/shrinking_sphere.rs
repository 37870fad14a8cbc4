//! The round sphere shrinks self-similarly, so every eigenvalue follows
//! `λ(t) = λ(0) / (1 − 2t)` until extinction at `t = 1/2`.

use std::sync::Arc;

use ricci_spectra::flow::{ConformalState, FlowConfig, FlowMode, RicciFlow};
use ricci_spectra::mesh::build_icosphere;
use ricci_spectra::modelspaces::{soliton_rate, ModelSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(build_icosphere(4, 1.0)?);
    let flow = RicciFlow::new(mesh.clone())?;
    let cfg = FlowConfig { mode: FlowMode::Unnormalized, t_end: 0.45, record_every: 25, spectrum_k: 3, ..Default::default() };
    let traj = flow.run(&ConformalState::round(mesh), &cfg)?;
    let sphere = ModelSpace::round_sphere(2, 1.0)?;

    let lambda0 = traj.snapshots[0].lambda1();
    let area0 = traj.snapshots[0].area;
    println!("{:>6} {:>10} {:>12} {:>10} {:>12}", "t", "area", "8π-law err", "lambda_1", "λ1σ/λ1(0)");
    for s in &traj.snapshots {
        let sigma = sphere.sigma(s.t);
        let area_err = (s.area - (area0 - 8.0 * std::f64::consts::PI * s.t)).abs();
        println!("{:>6.3} {:>10.5} {:>12.2e} {:>10.5} {:>12.6}", s.t, s.area, area_err, s.lambda1(), s.lambda1() * sigma / lambda0);
    }
    println!("exact rate of λ1 at t = 0.25: {}", soliton_rate(&sphere, 0.25, 1)?);
    println!("stopped: {:?}", traj.stopping_reason);
    Ok(())
}
