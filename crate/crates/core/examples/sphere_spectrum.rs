//! Laplacian spectrum of an icosphere against the exact `l(l+1)` table.
//!
//!     cargo run --release --example sphere_spectrum -- 4

use ricci_spectra::mesh::{assemble_mass, assemble_stiffness, build_icosphere};
use ricci_spectra::modelspaces::{exact_spectrum, ModelSpace};
use ricci_spectra::spectral::{solve_spectrum, DEFAULT_TOLERANCE};

fn main() -> ricci_spectra::Result<()> {
    let subdivisions: u32 = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(4);
    let mesh = build_icosphere(subdivisions, 1.0)?;
    let l = assemble_stiffness(&mesh)?;
    let m = assemble_mass(&mesh, &vec![0.0; mesh.vertex_count()])?;

    let pairs = solve_spectrum(&l, &m, 15, DEFAULT_TOLERANCE)?;
    let exact = exact_spectrum(&ModelSpace::round_sphere(2, 1.0)?, 4)?.expanded(16);

    println!("icosphere({subdivisions}): {} vertices", mesh.vertex_count());
    println!("{:>3} {:>12} {:>6} {:>10}", "k", "lambda_k", "exact", "rel err");
    for (p, e) in pairs.iter().zip(&exact) {
        let err = if *e > 0.0 { format!("{:.2e}", (p.lambda - e).abs() / e) } else { "-".into() };
        println!("{:>3} {:>12.6} {:>6} {:>10}", p.index, p.lambda, e, err);
    }
    Ok(())
}
