//! A flat torus is a steady soliton: nothing moves, every rate vanishes and
//! the discrete spectrum approaches `4π²|ξ|²` over the dual lattice.

use std::sync::Arc;

use ricci_spectra::flow::{ConformalState, FlowConfig, FlowMode, RicciFlow};
use ricci_spectra::mesh::build_flat_torus;
use ricci_spectra::modelspaces::{exact_spectrum, ModelSpace};
use ricci_spectra::variation::variation_report;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mesh = Arc::new(build_flat_torus(32, 32, 1.0, 1.0)?);
    let flow = RicciFlow::new(mesh.clone())?;
    for mode in [FlowMode::Unnormalized, FlowMode::Normalized] {
        let cfg = FlowConfig { mode, t_end: 0.05, spectrum_k: 8, ..Default::default() };
        let traj = flow.run(&ConformalState::round(mesh.clone()), &cfg)?;
        let report = variation_report(&traj)?;
        let worst = report.rows.iter().map(|r| r.fd_rate.abs().max(r.rhs_rate.abs()).max(r.integ_res_1).max(r.integ_res_2)).fold(0.0, f64::max);
        println!("{mode:?}: {} rows, largest rate or residual {worst:.1e}", report.rows.len());
    }
    let cfg = FlowConfig { t_end: 0.01, spectrum_k: 8, ..Default::default() };
    let discrete = flow.run(&ConformalState::round(mesh), &cfg)?.snapshots[0].lambdas();
    let exact = exact_spectrum(&ModelSpace::square_torus(2, 1.0)?, 3)?.expanded(9);
    for (d, e) in discrete.iter().zip(&exact) {
        println!("{d:>12.5} {e:>12.5}");
    }
    Ok(())
}
