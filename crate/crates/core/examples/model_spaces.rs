//! Closed-form spectra, soliton laws and the homogeneous rate bound on round
//! spheres and flat tori.

use ricci_spectra::modelspaces::*;
use ricci_spectra::variation::rate_bound;

fn main() -> ricci_spectra::Result<()> {
    for n in [2, 3, 4] {
        let s = ModelSpace::round_sphere(n, 1.0)?;
        let spec = exact_spectrum(&s, 4)?;
        let l1 = spec.lambda1().unwrap();
        println!(
            "S^{n}: spectrum {:?}  soliton rate {}  homogeneous rate {}  bound {}  normalized {}",
            spec.entries.iter().map(|e| (e.eigenvalue, e.multiplicity)).collect::<Vec<_>>(),
            soliton_rate(&s, 0.0, 1)?,
            homogeneous_rate(&s, 1)?,
            rate_bound(l1, n),
            homogeneous_rate_normalized(&s, 1)?,
        );
    }

    let hex = ModelSpace::flat_torus(vec![vec![1.0, 0.0], vec![0.5, 3f64.sqrt() / 2.0]])?;
    println!("hexagonal torus: {}", exact_spectrum(&hex, 4)?.to_json());

    let s3 = ModelSpace::round_sphere(3, 1.0)?;
    println!("pinching on S^3: {:?}", pinching_lower_bound(&s3)?);
    for (t, bound) in divergence_schedule(&s3, 6)? {
        println!("  t = {t:.5}  λ1 >= {bound:.3}");
    }
    Ok(())
}
