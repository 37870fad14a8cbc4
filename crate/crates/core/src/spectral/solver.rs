use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::Eigenpair;
use crate::error::{Error, Result};
use crate::mesh::{MassOperator, StiffnessOperator};
use crate::sparse::{dot, CsrMatrix, EnvelopeCholesky};

pub const DEFAULT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
pub struct SolverConfig {
    /// Relative residual `‖A f − λ M f‖ / (max(|λ|, 1) ‖M f‖)` at convergence.
    pub tol: f64,
    /// Iteration cap; `None` means `10 · dim`.
    pub max_iterations: Option<usize>,
    /// Guard vectors carried beyond the wanted count.
    pub extra_vectors: usize,
    pub seed: u64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { tol: DEFAULT_TOLERANCE, max_iterations: None, extra_vectors: 6, seed: 0x5eed }
    }
}

/// Smallest `k + 1` eigenpairs of `L f = λ M f`. Index 0 is the constant
/// mode; the rest are M-orthonormal and M-orthogonal to constants.
pub fn solve_spectrum(
    l: &StiffnessOperator,
    m: &MassOperator,
    k: usize,
    tol: f64,
) -> Result<Vec<Eigenpair>> {
    SpectralSolver::new(SolverConfig { tol, ..Default::default() }).solve(l, m, k, None)
}

#[derive(Debug, Clone, Default)]
pub struct SpectralSolver {
    pub config: SolverConfig,
}

/// Converged eigenpairs of a general pencil, ascending.
#[derive(Debug, Clone)]
pub struct PencilSolution {
    pub values: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    pub iterations: usize,
    pub max_residual: f64,
}

impl SpectralSolver {
    pub fn new(config: SolverConfig) -> Self {
        SpectralSolver { config }
    }

    /// Laplacian spectrum with an optional warm start (e.g. the eigenvectors
    /// of the previous snapshot; the constant mode is ignored if present).
    pub fn solve(
        &self,
        l: &StiffnessOperator,
        m: &MassOperator,
        k: usize,
        guess: Option<&[Vec<f64>]>,
    ) -> Result<Vec<Eigenpair>> {
        let n = l.dim();
        if m.dim() != n {
            return Err(Error::input(format!("stiffness is {n}x{n} but mass has {} entries", m.dim())));
        }
        if k == 0 || k >= n {
            return Err(Error::input(format!("k must satisfy 1 <= k < V = {n}, got {k}")));
        }
        if !(self.config.tol >= 1e-14) {
            return Err(Error::input(format!("tolerance {} is below 1e-14", self.config.tol)));
        }

        let area = m.trace();
        let c = 1.0 / area.sqrt();
        let constant = vec![c; n];
        let lambda0 = l.energy(&constant);
        let mut pairs = vec![Eigenpair { index: 0, lambda: lambda0, f: constant }];

        let sol = self.solve_pencil(l.matrix(), m, k, 0.0, true, guess)?;
        for (i, (lambda, f)) in sol.values.into_iter().zip(sol.vectors).enumerate() {
            pairs.push(Eigenpair { index: i + 1, lambda, f });
        }
        Ok(pairs)
    }

    /// Smallest `count` eigenpairs of `A f = μ M f` for symmetric `A` with
    /// `A + σ M` positive definite for every `σ > -lower_bound`. With
    /// `deflate_constant` the search runs in the M-orthogonal complement of
    /// the constant vector.
    pub fn solve_pencil(
        &self,
        a: &CsrMatrix,
        m: &MassOperator,
        count: usize,
        lower_bound: f64,
        deflate_constant: bool,
        guess: Option<&[Vec<f64>]>,
    ) -> Result<PencilSolution> {
        let n = a.dim();
        let available = n - usize::from(deflate_constant);
        if count == 0 || count > available {
            return Err(Error::input(format!("cannot compute {count} eigenpairs of a {n}-dimensional pencil")));
        }
        let block = (count + self.config.extra_vectors.max(count / 2)).min(available);
        let max_iter = self.config.max_iterations.unwrap_or(10 * n).max(1);
        let mass = m.diagonal();

        let scale = a.diagonal().iter().zip(mass).map(|(d, mi)| d / mi).sum::<f64>() / n as f64;
        let sigma = -lower_bound + 1e-4 * (scale - lower_bound).abs().max(1e-300);
        let shifted: Vec<f64> = mass.iter().map(|mi| sigma * mi).collect();
        let factor = EnvelopeCholesky::factor(&a.scaled_plus_diagonal(1.0, &shifted))?;

        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        let mut x: Vec<Vec<f64>> = Vec::with_capacity(block);
        if let Some(g) = guess {
            for v in g.iter().filter(|v| v.len() == n).take(block) {
                x.push(v.clone());
            }
        }
        while x.len() < block {
            x.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        }

        let area: f64 = mass.iter().sum();
        let mut best = f64::INFINITY;
        for iter in 1..=max_iter {
            if deflate_constant {
                for v in x.iter_mut() {
                    deflate(v, mass, area);
                }
            }
            m_orthonormalize(&mut x, mass, deflate_constant, &mut rng);

            let ax: Vec<Vec<f64>> = x.iter().map(|v| a.mul_vec(v)).collect();
            let mut h = DMatrix::<f64>::zeros(block, block);
            for i in 0..block {
                for j in 0..=i {
                    let v = 0.5 * (dot(&x[i], &ax[j]) + dot(&x[j], &ax[i]));
                    h[(i, j)] = v;
                    h[(j, i)] = v;
                }
            }
            let eig = SymmetricEigen::new(h);
            let mut order: Vec<usize> = (0..block).collect();
            order.sort_by(|&p, &q| eig.eigenvalues[p].total_cmp(&eig.eigenvalues[q]));

            let combine = |basis: &[Vec<f64>], col: usize| -> Vec<f64> {
                let mut out = vec![0.0; n];
                for (r, b) in basis.iter().enumerate() {
                    let w = eig.eigenvectors[(r, col)];
                    out.iter_mut().zip(b).for_each(|(o, bi)| *o += w * bi);
                }
                out
            };
            let ritz: Vec<Vec<f64>> = order.iter().map(|&c| combine(&x, c)).collect();
            let values: Vec<f64> = order.iter().map(|&c| eig.eigenvalues[c]).collect();

            let mut worst: f64 = 0.0;
            for j in 0..count {
                let ay = combine(&ax, order[j]);
                let my: Vec<f64> = ritz[j].iter().zip(mass).map(|(y, mi)| y * mi).collect();
                let res: f64 =
                    ay.iter().zip(&my).map(|(p, q)| (p - values[j] * q).powi(2)).sum::<f64>().sqrt();
                let denom = values[j].abs().max(1.0) * dot(&my, &my).sqrt();
                worst = worst.max(res / denom);
            }
            best = best.min(worst);

            if worst <= self.config.tol {
                let mut vectors: Vec<Vec<f64>> = ritz.into_iter().take(count).collect();
                vectors.iter_mut().for_each(|v| fix_sign(v));
                return Ok(PencilSolution {
                    values: values[..count].to_vec(),
                    vectors,
                    iterations: iter,
                    max_residual: worst,
                });
            }

            x = ritz
                .iter()
                .map(|y| {
                    let my: Vec<f64> = y.iter().zip(mass).map(|(yi, mi)| yi * mi).collect();
                    factor.solve(&my)
                })
                .collect();
        }
        Err(Error::SolverDiverged { iterations: max_iter, best_residual: best })
    }
}

fn deflate(v: &mut [f64], mass: &[f64], area: f64) {
    let mean = v.iter().zip(mass).map(|(x, m)| x * m).sum::<f64>() / area;
    v.iter_mut().for_each(|x| *x -= mean);
}

/// Modified Gram–Schmidt in the M inner product, two passes. Columns that
/// collapse are replaced by fresh random vectors.
fn m_orthonormalize(x: &mut [Vec<f64>], mass: &[f64], deflate_constant: bool, rng: &mut ChaCha8Rng) {
    let area: f64 = mass.iter().sum();
    let m_dot = |a: &[f64], b: &[f64]| -> f64 { a.iter().zip(b).zip(mass).map(|((p, q), m)| p * q * m).sum() };
    for j in 0..x.len() {
        for attempt in 0..4 {
            let before = m_dot(&x[j], &x[j]).sqrt();
            for _ in 0..2 {
                for i in 0..j {
                    let (done, rest) = x.split_at_mut(j);
                    let c = m_dot(&done[i], &rest[0]);
                    rest[0].iter_mut().zip(&done[i]).for_each(|(v, q)| *v -= c * q);
                }
            }
            let norm = m_dot(&x[j], &x[j]).sqrt();
            if norm > 1e-10 * before && norm > 0.0 {
                x[j].iter_mut().for_each(|v| *v /= norm);
                break;
            }
            assert!(attempt < 3, "could not complete an M-orthonormal basis");
            x[j] = (0..mass.len()).map(|_| rng.random_range(-1.0..1.0)).collect();
            if deflate_constant {
                deflate(&mut x[j], mass, area);
            }
        }
    }
}

/// Largest-magnitude entry made positive.
fn fix_sign(v: &mut [f64]) {
    let pivot = v
        .iter()
        .enumerate()
        .fold((0, 0.0f64), |(bi, bv), (i, &x)| if x.abs() > bv { (i, x.abs()) } else { (bi, bv) })
        .0;
    if v[pivot] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Path graph Laplacian with unit masses: eigenvalues 2 - 2cos(πk/n).
    #[test]
    fn path_graph_spectrum() {
        let n = 40;
        let mut t = Vec::new();
        for i in 0..n - 1 {
            t.extend_from_slice(&[(i, i, 1.0), (i + 1, i + 1, 1.0), (i, i + 1, -1.0), (i + 1, i, -1.0)]);
        }
        let a = CsrMatrix::from_triplets(n, &t);
        let m = MassOperator::from_diagonal(vec![1.0; n]).unwrap();
        let sol = SpectralSolver::default().solve_pencil(&a, &m, 5, 0.0, true, None).unwrap();
        for (k, mu) in sol.values.iter().enumerate() {
            let exact = 2.0 - 2.0 * (std::f64::consts::PI * (k + 1) as f64 / n as f64).cos();
            assert!((mu - exact).abs() < 1e-12, "k={k}: {mu} vs {exact}");
        }
    }

    #[test]
    fn rejects_bad_sizes() {
        let n = 5;
        let a = CsrMatrix::from_triplets(n, &[(0, 0, 1.0)]);
        let m = MassOperator::from_diagonal(vec![1.0; n]).unwrap();
        assert!(SpectralSolver::default().solve_pencil(&a, &m, 5, 0.0, true, None).is_err());
    }
}
