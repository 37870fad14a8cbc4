use super::Mesh;
use crate::error::{Error, Result};
use crate::sparse::CsrMatrix;

/// Relative area below which a triangle aborts stiffness assembly.
pub const DEGENERATE_AREA_RATIO: f64 = 1e-12;

/// Cotangent stiffness matrix `L` (positive semidefinite, zero row sums).
///
/// In two dimensions the Dirichlet energy is conformally invariant, so the
/// matrix assembled from `g0` serves every metric `e^u g0` of a flow.
#[derive(Debug, Clone)]
pub struct StiffnessOperator {
    matrix: CsrMatrix,
}

impl StiffnessOperator {
    pub fn matrix(&self) -> &CsrMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        self.matrix.mul_vec(x)
    }

    pub fn energy(&self, x: &[f64]) -> f64 {
        self.matrix.quadratic_form(x)
    }
}

/// Diagonal lumped mass matrix `M(u) = diag(a_i e^{u_i})`.
#[derive(Debug, Clone, PartialEq)]
pub struct MassOperator {
    diag: Vec<f64>,
}

impl MassOperator {
    /// Wraps explicit diagonal entries, which must all be positive.
    pub fn from_diagonal(diag: Vec<f64>) -> Result<Self> {
        if let Some(i) = diag.iter().position(|&d| !(d.is_finite() && d > 0.0)) {
            return Err(Error::input(format!("mass entry {i} is not positive: {}", diag[i])));
        }
        Ok(MassOperator { diag })
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }

    pub fn dim(&self) -> usize {
        self.diag.len()
    }

    /// Total area of the metric.
    pub fn trace(&self) -> f64 {
        self.diag.iter().sum()
    }

    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().zip(&self.diag).map(|(a, b)| a * b).collect()
    }

    /// `<x, M y>`.
    pub fn inner(&self, x: &[f64], y: &[f64]) -> f64 {
        x.iter().zip(y).zip(&self.diag).map(|((a, b), m)| a * b * m).sum()
    }

    pub fn norm_sq(&self, x: &[f64]) -> f64 {
        self.inner(x, x)
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::from_diagonal(self.diag.iter().map(|d| d * c).collect())
    }
}

pub fn assemble_stiffness(mesh: &Mesh) -> Result<StiffnessOperator> {
    let areas = mesh.face_areas();
    let mean = mesh.total_base_area() / areas.len() as f64;
    let threshold = DEGENERATE_AREA_RATIO * mean;
    if let Some(face) = areas.iter().position(|&a| !(a >= threshold)) {
        return Err(Error::DegenerateFace { face, area: areas[face], threshold });
    }

    let n = mesh.vertex_count();
    let mut triplets = Vec::with_capacity(mesh.face_count() * 6);
    for (fi, f) in mesh.faces().iter().enumerate() {
        let cot = mesh.face_cotangents(fi);
        for k in 0..3 {
            let (i, j) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            let w = 0.5 * cot[k];
            triplets.push((i, j, -w));
            triplets.push((j, i, -w));
        }
    }
    let off = CsrMatrix::from_triplets(n, &triplets);
    // diagonal from the assembled off-diagonals so rows sum to zero
    let diag: Vec<f64> = (0..n).map(|i| -off.row(i).map(|(_, v)| v).sum::<f64>()).collect();
    Ok(StiffnessOperator { matrix: off.scaled_plus_diagonal(1.0, &diag) })
}

pub fn assemble_mass(mesh: &Mesh, u: &[f64]) -> Result<MassOperator> {
    check_conformal_factor(mesh, u)?;
    MassOperator::from_diagonal(
        mesh.base_vertex_area().iter().zip(u).map(|(a, ui)| a * ui.exp()).collect(),
    )
}

/// Scalar curvature `R = 2K` of `g = e^u g0` at each vertex, from
/// `K = e^{-u} (K0 - ½ Δ0 u)` with `Δ0 = -M(0)^{-1} L`.
pub fn scalar_curvature(mesh: &Mesh, u: &[f64], stiffness: &StiffnessOperator) -> Result<Vec<f64>> {
    check_conformal_factor(mesh, u)?;
    let lu = stiffness.apply(u);
    Ok(mesh
        .base_curvature()
        .iter()
        .zip(mesh.base_vertex_area())
        .zip(u.iter().zip(&lu))
        .map(|((k0, a), (ui, lui))| 2.0 * (-ui).exp() * (k0 + 0.5 * lui / a))
        .collect())
}

/// `∫ field dμ` for the metric `e^u g0`, with lumped-mass quadrature.
pub fn integrate(mesh: &Mesh, u: &[f64], field: &[f64]) -> f64 {
    assert_eq!(u.len(), mesh.vertex_count());
    assert_eq!(field.len(), mesh.vertex_count());
    mesh.base_vertex_area().iter().zip(u).zip(field).map(|((a, ui), fi)| fi * a * ui.exp()).sum()
}

fn check_conformal_factor(mesh: &Mesh, u: &[f64]) -> Result<()> {
    if u.len() != mesh.vertex_count() {
        return Err(Error::input(format!(
            "conformal factor has {} entries for {} vertices",
            u.len(),
            mesh.vertex_count()
        )));
    }
    if let Some(i) = u.iter().position(|x| !x.is_finite()) {
        return Err(Error::input(format!("conformal factor is not finite at vertex {i}")));
    }
    Ok(())
}
