//! Closed-form spectra and flow laws on round spheres and flat tori in any
//! dimension.
//!
//! Both families are Einstein, `Ric = c g`, so the Ricci flow acts by pure
//! scaling `g(t) = σ(t) g0` with `σ(t) = 1 + 2εt` and `ε = −c`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::variation::{rate_bound, VariationRow};

/// Upper limit on the number of distinct eigenvalues requested.
pub const MAX_SPECTRUM_COUNT: usize = 10_000;
/// Upper limit on dual-lattice points visited by the torus enumeration.
const MAX_LATTICE_POINTS: u64 = 50_000_000;
/// Relative tolerance for merging equal torus eigenvalues.
const MERGE_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ModelSpace {
    RoundSphere { n: usize, radius: f64 },
    /// Rows of `lattice` are a basis of the period lattice.
    FlatTorus { n: usize, lattice: Vec<Vec<f64>> },
}

impl ModelSpace {
    pub fn round_sphere(n: usize, radius: f64) -> Result<Self> {
        if n < 2 {
            return Err(Error::input(format!("sphere dimension must be at least 2, got {n}")));
        }
        if !(radius.is_finite() && radius > 0.0) {
            return Err(Error::input(format!("radius must be positive, got {radius}")));
        }
        Ok(ModelSpace::RoundSphere { n, radius })
    }

    pub fn flat_torus(lattice: Vec<Vec<f64>>) -> Result<Self> {
        let n = lattice.len();
        if n == 0 || lattice.iter().any(|row| row.len() != n) {
            return Err(Error::input("torus lattice must be a square n×n basis matrix"));
        }
        if lattice.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::input("torus lattice entries must be finite"));
        }
        let det = basis_matrix(&lattice).determinant();
        let scale: f64 = lattice.iter().map(|r| r.iter().map(|x| x * x).sum::<f64>().sqrt()).product();
        if !(det.abs() > 1e-12 * scale) {
            return Err(Error::input("torus lattice is singular"));
        }
        Ok(ModelSpace::FlatTorus { n, lattice })
    }

    /// The square torus `R^n / (side · Z^n)`.
    pub fn square_torus(n: usize, side: f64) -> Result<Self> {
        let lattice = (0..n).map(|i| (0..n).map(|j| if i == j { side } else { 0.0 }).collect()).collect();
        Self::flat_torus(lattice)
    }

    pub fn dimension(&self) -> usize {
        match self {
            ModelSpace::RoundSphere { n, .. } | ModelSpace::FlatTorus { n, .. } => *n,
        }
    }

    /// `c` in `Ric = c g`.
    pub fn einstein_constant(&self) -> f64 {
        match self {
            ModelSpace::RoundSphere { n, radius } => (*n as f64 - 1.0) / (radius * radius),
            ModelSpace::FlatTorus { .. } => 0.0,
        }
    }

    pub fn scalar_curvature(&self) -> f64 {
        self.dimension() as f64 * self.einstein_constant()
    }

    /// Soliton constant: shrinking spheres have `ε = −(n−1)/r²`, tori are steady.
    pub fn epsilon(&self) -> f64 {
        -self.einstein_constant()
    }

    /// `σ(t) = 1 + 2εt`.
    pub fn sigma(&self, t: f64) -> f64 {
        1.0 + 2.0 * self.epsilon() * t
    }

    /// Time at which `σ` vanishes, for shrinking solitons.
    pub fn extinction_time(&self) -> Option<f64> {
        let eps = self.epsilon();
        (eps < 0.0).then(|| -1.0 / (2.0 * eps))
    }

    fn checked_sigma(&self, t: f64) -> Result<f64> {
        let sigma = self.sigma(t);
        if !(sigma > 0.0) {
            return Err(Error::PastExtinction { t, sigma });
        }
        Ok(sigma)
    }
}

fn basis_matrix(lattice: &[Vec<f64>]) -> DMatrix<f64> {
    let n = lattice.len();
    DMatrix::from_fn(n, n, |i, j| lattice[i][j])
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectrumEntry {
    pub eigenvalue: f64,
    pub multiplicity: u64,
}

/// Distinct eigenvalues with multiplicities, ascending, starting at `(0, 1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExactSpectrum {
    pub entries: Vec<SpectrumEntry>,
}

impl ExactSpectrum {
    /// Eigenvalue at position `index` of the spectrum listed with
    /// multiplicity (index 0 is the constant mode).
    pub fn eigenvalue(&self, index: usize) -> Option<f64> {
        let mut seen = 0u64;
        for e in &self.entries {
            seen += e.multiplicity;
            if (index as u64) < seen {
                return Some(e.eigenvalue);
            }
        }
        None
    }

    /// The first `count` eigenvalues listed with multiplicity.
    pub fn expanded(&self, count: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(count);
        'outer: for e in &self.entries {
            for _ in 0..e.multiplicity {
                if out.len() == count {
                    break 'outer;
                }
                out.push(e.eigenvalue);
            }
        }
        out
    }

    pub fn lambda1(&self) -> Option<f64> {
        self.entries.get(1).map(|e| e.eigenvalue)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("spectrum serializes")
    }
}

/// First `count` distinct eigenvalues of the Laplacian of `space`.
pub fn exact_spectrum(space: &ModelSpace, count: usize) -> Result<ExactSpectrum> {
    if count == 0 || count > MAX_SPECTRUM_COUNT {
        return Err(Error::Resource(format!("spectrum count must lie in 1..={MAX_SPECTRUM_COUNT}, got {count}")));
    }
    match space {
        ModelSpace::RoundSphere { n, radius } => sphere_spectrum(*n, *radius, count),
        ModelSpace::FlatTorus { lattice, .. } => torus_spectrum(lattice, count),
    }
}

fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        acc = acc.checked_mul((n - i) as u128)? / (i as u128 + 1);
    }
    Some(acc)
}

fn sphere_spectrum(n: usize, radius: f64, count: usize) -> Result<ExactSpectrum> {
    let nn = n as u64;
    let overflow = || Error::Resource(format!("sphere multiplicities overflow for n = {n}"));
    let mut entries = Vec::with_capacity(count);
    for l in 0..count as u64 {
        // dimension of degree-l harmonic polynomials in n + 1 variables
        let upper = binomial(l + nn, nn).ok_or_else(overflow)?;
        let lower = if l >= 2 { binomial(l + nn - 2, nn).ok_or_else(overflow)? } else { 0 };
        let multiplicity = u64::try_from(upper - lower).map_err(|_| overflow())?;
        let eigenvalue = (l * (l + nn - 1)) as f64 / (radius * radius);
        entries.push(SpectrumEntry { eigenvalue, multiplicity });
    }
    Ok(ExactSpectrum { entries })
}

/// Eigenvalues `4π²|ξ|²` over the dual lattice `B^{-T}`. For `ξ` in the ball
/// of radius `ρ` the integer coordinates satisfy `|c_j| = |ξ · b_j| ≤ ρ|b_j|`,
/// so that box contains every dual vector of the ball; `ρ` grows until the
/// ball holds `count` distinct values.
fn torus_spectrum(lattice: &[Vec<f64>], count: usize) -> Result<ExactSpectrum> {
    let n = lattice.len();
    let b = basis_matrix(lattice);
    let dual = b.clone().try_inverse().ok_or_else(|| Error::input("torus lattice is singular"))?.transpose();
    let row_norms: Vec<f64> = (0..n).map(|i| b.row(i).norm()).collect();
    let shortest_dual = (0..n).map(|i| dual.row(i).norm()).fold(f64::INFINITY, f64::min);

    let mut rho = shortest_dual * (count as f64).powf(1.0 / n as f64).max(1.0);
    loop {
        let bounds: Vec<i64> = row_norms.iter().map(|bn| (rho * bn).floor() as i64).collect();
        let points = bounds.iter().try_fold(1u64, |acc, &m| acc.checked_mul(2 * m as u64 + 1));
        match points {
            Some(p) if p <= MAX_LATTICE_POINTS => {}
            _ => return Err(Error::Resource(format!("torus enumeration exceeds {MAX_LATTICE_POINTS} lattice points"))),
        }

        let mut norms = Vec::new();
        let mut c: Vec<i64> = bounds.iter().map(|m| -m).collect();
        'enumerate: loop {
            let mut xi = vec![0.0; n];
            for (j, &cj) in c.iter().enumerate() {
                for (k, x) in xi.iter_mut().enumerate() {
                    *x += cj as f64 * dual[(j, k)];
                }
            }
            let sq: f64 = xi.iter().map(|x| x * x).sum();
            if sq <= rho * rho * (1.0 + MERGE_TOL) {
                norms.push(sq);
            }
            for j in 0..n {
                if c[j] < bounds[j] {
                    c[j] += 1;
                    continue 'enumerate;
                }
                c[j] = -bounds[j];
            }
            break;
        }

        norms.sort_by(f64::total_cmp);
        let mut entries: Vec<SpectrumEntry> = Vec::new();
        let mut last = f64::NEG_INFINITY;
        for sq in norms {
            if (sq - last).abs() <= MERGE_TOL * sq.max(1e-300) {
                entries.last_mut().unwrap().multiplicity += 1;
            } else {
                entries.push(SpectrumEntry { eigenvalue: sq, multiplicity: 1 });
                last = sq;
            }
        }
        if entries.len() >= count {
            entries.truncate(count);
            for e in &mut entries {
                e.eigenvalue *= 4.0 * PI * PI;
            }
            entries[0].eigenvalue = 0.0;
            return Ok(ExactSpectrum { entries });
        }
        rho *= 1.5;
    }
}

/// `Spec(g(t)) = Spec(g0) / σ(t)`.
pub fn soliton_spectrum(space: &ModelSpace, t: f64, count: usize) -> Result<ExactSpectrum> {
    let sigma = space.checked_sigma(t)?;
    let mut spec = exact_spectrum(space, count)?;
    spec.entries.iter_mut().for_each(|e| e.eigenvalue /= sigma);
    Ok(spec)
}

fn initial_eigenvalue(space: &ModelSpace, eigen_index: usize) -> Result<f64> {
    // enough distinct values to cover the index in either family
    let mut count = 2;
    loop {
        let spec = exact_spectrum(space, count.min(MAX_SPECTRUM_COUNT))?;
        if let Some(l) = spec.eigenvalue(eigen_index) {
            return Ok(l);
        }
        if count >= MAX_SPECTRUM_COUNT {
            return Err(Error::Resource(format!("eigen index {eigen_index} lies beyond the enumeration bound")));
        }
        count *= 2;
    }
}

/// `dλ/dt = −λ0 σ′(t) / σ(t)²` for the eigenvalue at `eigen_index`
/// (counted with multiplicity).
pub fn soliton_rate(space: &ModelSpace, t: f64, eigen_index: usize) -> Result<f64> {
    let sigma = space.checked_sigma(t)?;
    let lambda0 = initial_eigenvalue(space, eigen_index)?;
    let sigma_dot = 2.0 * space.epsilon();
    Ok(-lambda0 * sigma_dot / (sigma * sigma))
}

/// `2 ∫ Ric(∇f, ∇f) dμ = 2cλ` at `t = 0`.
pub fn homogeneous_rate(space: &ModelSpace, eigen_index: usize) -> Result<f64> {
    Ok(2.0 * space.einstein_constant() * initial_eigenvalue(space, eigen_index)?)
}

/// `−(2/n) R λ + 2cλ`, identically zero on Einstein spaces.
pub fn homogeneous_rate_normalized(space: &ModelSpace, eigen_index: usize) -> Result<f64> {
    let lambda = initial_eigenvalue(space, eigen_index)?;
    let n = space.dimension() as f64;
    Ok(-(2.0 / n) * space.scalar_curvature() * lambda + 2.0 * space.einstein_constant() * lambda)
}

/// `(n−1)/n ∫(Δf)² − ∫Ric(∇f,∇f) = (n−1)/n λ² − cλ` for a normalized
/// eigenfunction; nonnegative whenever the Reilly argument applies.
pub fn reilly_gap(space: &ModelSpace, eigen_index: usize) -> Result<f64> {
    let lambda = initial_eigenvalue(space, eigen_index)?;
    let n = space.dimension() as f64;
    Ok((n - 1.0) / n * lambda * lambda - space.einstein_constant() * lambda)
}

/// A variation-report row for the exact flow at `t = 0`: the "finite
/// difference" column carries the soliton rate and the right-hand side the
/// homogeneous rate.
pub fn model_variation_row(space: &ModelSpace, eigen_index: usize) -> Result<VariationRow> {
    let lambda = initial_eigenvalue(space, eigen_index)?;
    let fd_rate = soliton_rate(space, 0.0, eigen_index)?;
    let rhs_rate = homogeneous_rate(space, eigen_index)?;
    Ok(VariationRow {
        t: 0.0,
        index: eigen_index,
        is_cluster: false,
        cluster_size: 1,
        lambda,
        fd_rate,
        rhs_rate,
        rel_error: crate::variation::relative_error(fd_rate, rhs_rate),
        integ_res_1: 0.0,
        integ_res_2: 0.0,
        tracking_ok: true,
    })
}

/// `rate_bound(λ, n) − dλ/dt` for the model flow at `t = 0`.
pub fn rate_bound_margin(space: &ModelSpace, eigen_index: usize) -> Result<f64> {
    let row = model_variation_row(space, eigen_index)?;
    Ok(rate_bound(row.lambda, space.dimension()) - row.fd_rate)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PinchingBound {
    pub epsilon_pinch: f64,
    pub bound: f64,
    pub lambda1: f64,
}

fn require_three_sphere(space: &ModelSpace) -> Result<f64> {
    match space {
        ModelSpace::RoundSphere { n: 3, radius } => Ok(*radius),
        other => Err(Error::Domain(format!("the pinching argument is three-dimensional; got {other:?}"))),
    }
}

/// `λ1 ≥ (3/2) ε R_min` with the Einstein pinching `ε = 1/3` on round S³.
pub fn pinching_lower_bound(space: &ModelSpace) -> Result<PinchingBound> {
    require_three_sphere(space)?;
    let epsilon_pinch = 1.0 / 3.0;
    let bound = 1.5 * epsilon_pinch * space.scalar_curvature();
    let lambda1 = initial_eigenvalue(space, 1)?;
    if lambda1 < bound * (1.0 - 1e-12) {
        return Err(Error::contract(format!("λ1 = {lambda1} violates the pinching bound {bound}")));
    }
    Ok(PinchingBound { epsilon_pinch, bound, lambda1 })
}

/// The pinching bound `(3/2) ε R_min(t) = R(0) / (2σ(t))` along the
/// shrinking S³.
pub fn pinching_bound_at(space: &ModelSpace, t: f64) -> Result<f64> {
    let PinchingBound { bound, .. } = pinching_lower_bound(space)?;
    Ok(bound / space.checked_sigma(t)?)
}

/// `samples` times `t_k = T (1 − 2^{−k})` approaching the extinction time
/// with the pinching lower bound for λ1 at each; the bound doubles per sample.
pub fn divergence_schedule(space: &ModelSpace, samples: usize) -> Result<Vec<(f64, f64)>> {
    require_three_sphere(space)?;
    let big_t = space.extinction_time().expect("spheres shrink");
    (0..samples)
        .map(|k| {
            let t = big_t * (1.0 - 0.5f64.powi(k as i32));
            Ok((t, pinching_bound_at(space, t)?))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(2, 3), Some(0));
        assert_eq!(binomial(40, 20), Some(137_846_528_820));
    }

    #[test]
    fn sphere_tables() {
        let s2 = exact_spectrum(&ModelSpace::round_sphere(2, 1.0).unwrap(), 3).unwrap();
        let got: Vec<(f64, u64)> = s2.entries.iter().map(|e| (e.eigenvalue, e.multiplicity)).collect();
        assert_eq!(got, vec![(0.0, 1), (2.0, 3), (6.0, 5)]);
        let s3 = exact_spectrum(&ModelSpace::round_sphere(3, 1.0).unwrap(), 2).unwrap();
        assert_eq!(s3.entries[1], SpectrumEntry { eigenvalue: 3.0, multiplicity: 4 });
    }

    #[test]
    fn expanded_indexing() {
        let s2 = exact_spectrum(&ModelSpace::round_sphere(2, 1.0).unwrap(), 3).unwrap();
        assert_eq!(s2.expanded(6), vec![0.0, 2.0, 2.0, 2.0, 6.0, 6.0]);
        assert_eq!(s2.eigenvalue(4), Some(6.0));
        assert_eq!(s2.eigenvalue(9), None);
    }
}
