//! Loads a triangle mesh from an OFF file (an octahedron written on the fly
//! when no path is given) and reports its topology and low spectrum.

use ricci_spectra::mesh::{assemble_mass, assemble_stiffness, load_off, scalar_curvature, integrate};
use ricci_spectra::spectral::{solve_spectrum, DEFAULT_TOLERANCE};

const OCTAHEDRON: &str = "OFF
6 8 12
1 0 0
-1 0 0
0 1 0
0 -1 0
0 0 1
0 0 -1
3 0 2 4
3 2 1 4
3 1 3 4
3 3 0 4
3 2 0 5
3 1 2 5
3 3 1 5
3 0 3 5
";

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = match std::env::args().nth(1) {
        Some(p) => p.into(),
        None => {
            let p = std::env::temp_dir().join("octahedron.off");
            std::fs::write(&p, OCTAHEDRON)?;
            p
        }
    };
    let mesh = load_off(&path)?;
    let l = assemble_stiffness(&mesh)?;
    let u = vec![0.0; mesh.vertex_count()];
    let m = assemble_mass(&mesh, &u)?;
    let r = scalar_curvature(&mesh, &u, &l)?;
    println!("{}: V = {}, F = {}, χ = {}", path.display(), mesh.vertex_count(), mesh.face_count(), mesh.euler_characteristic());
    println!("area {:.6}, ∫R dμ = {:.12} (4πχ = {:.12})", m.trace(), integrate(&mesh, &u, &r), 4.0 * std::f64::consts::PI * mesh.euler_characteristic() as f64);
    let k = 4.min(mesh.vertex_count() - 1);
    for p in solve_spectrum(&l, &m, k, DEFAULT_TOLERANCE)? {
        println!("λ_{} = {:.6}", p.index, p.lambda);
    }
    Ok(())
}
