//! Generalized eigenproblem `L f = λ M f`, eigenfunction normalization
//! (`∫f dμ = 0`, `∫f² dμ = 1` for nonconstant modes) and eigenpair tracking.

mod solver;
mod tracking;

use serde::{Deserialize, Serialize};

pub use solver::{solve_spectrum, PencilSolution, SolverConfig, SpectralSolver, DEFAULT_TOLERANCE};
pub use tracking::{track, Tracked, TRACKING_LOSS_OVERLAP};

use crate::error::{Error, Result};
use crate::mesh::{MassOperator, StiffnessOperator};

/// Relative eigenvalue gap below which eigenvalues form one cluster.
pub const CLUSTER_GAP: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Eigenpair {
    /// Position in the spectrum (0 is the constant mode). After tracking
    /// this is the branch index.
    pub index: usize,
    pub lambda: f64,
    pub f: Vec<f64>,
}

/// The tracked spectrum and curvature summary of `g(t) = e^u g0` at one time.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SpectrumSnapshot {
    pub t: f64,
    pub eigenpairs: Vec<Eigenpair>,
    pub area: f64,
    /// Average scalar curvature `r = ∫R dμ / ∫dμ`.
    pub r_avg: f64,
    pub r_min: f64,
    pub r_max: f64,
    pub u: Vec<f64>,
    pub curvature: Vec<f64>,
    /// Branch indices whose tracking overlap fell below the loss threshold.
    pub tracking_lost: Vec<usize>,
}

impl SpectrumSnapshot {
    pub fn tracking_ok(&self) -> bool {
        self.tracking_lost.is_empty()
    }

    pub fn lambdas(&self) -> Vec<f64> {
        self.eigenpairs.iter().map(|p| p.lambda).collect()
    }

    /// Smallest nonzero eigenvalue among the stored branches.
    pub fn lambda1(&self) -> f64 {
        self.eigenpairs.iter().skip(1).map(|p| p.lambda).fold(f64::INFINITY, f64::min)
    }

    /// Positions (into `eigenpairs`) of the cluster containing position `pos`.
    pub fn cluster_of(&self, pos: usize) -> Vec<usize> {
        cluster_groups(&self.lambdas()).into_iter().find(|g| g.contains(&pos)).unwrap_or_else(|| vec![pos])
    }
}

pub fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Groups positions whose eigenvalues chain together with relative gap
/// below [`CLUSTER_GAP`]. Groups are ordered by eigenvalue; positions
/// inside a group are ascending.
pub fn cluster_groups(lambdas: &[f64]) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..lambdas.len()).collect();
    order.sort_by(|&a, &b| lambdas[a].total_cmp(&lambdas[b]).then(a.cmp(&b)));
    let mut groups: Vec<Vec<usize>> = Vec::new();
    for (k, &pos) in order.iter().enumerate() {
        let joins = k > 0 && relative_gap(lambdas[order[k - 1]], lambdas[pos]) < CLUSTER_GAP;
        match groups.last_mut() {
            Some(g) if joins => g.push(pos),
            _ => groups.push(vec![pos]),
        }
    }
    groups.iter_mut().for_each(|g| g.sort_unstable());
    groups
}

/// `fᵀ L f / fᵀ M f`.
pub fn rayleigh_quotient(f: &[f64], l: &StiffnessOperator, m: &MassOperator) -> Result<f64> {
    let denom = m.norm_sq(f);
    if !(denom > 0.0) {
        return Err(Error::input("Rayleigh quotient of a function with zero M-norm"));
    }
    Ok(l.energy(f) / denom)
}

/// `‖L f − λ M f‖ / ‖M f‖`.
pub fn residual_norm(pair: &Eigenpair, l: &StiffnessOperator, m: &MassOperator) -> f64 {
    let lf = l.apply(&pair.f);
    let mf = m.apply(&pair.f);
    let r: f64 = lf.iter().zip(&mf).map(|(a, b)| (a - pair.lambda * b).powi(2)).sum::<f64>().sqrt();
    r / mf.iter().map(|x| x * x).sum::<f64>().sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn clusters_chain_by_relative_gap() {
        let l = [0.0, 2.0, 2.0 + 1e-9, 6.0, 2.0 - 1e-9, 6.0 * (1.0 + 5e-7)];
        assert_eq!(cluster_groups(&l), vec![vec![0], vec![1, 2, 4], vec![3, 5]]);
    }

    #[test]
    fn zero_is_its_own_cluster() {
        assert_eq!(cluster_groups(&[0.0, 1e-20]), vec![vec![0], vec![1]]);
    }
}
