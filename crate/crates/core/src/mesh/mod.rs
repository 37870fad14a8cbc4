//! Closed triangle meshes and the discrete metric quantities built on them.
//!
//! A [`Mesh`] carries the base metric `g0` through per-corner edge lengths.
//! Everything downstream (cotangent weights, lumped areas, angle defects)
//! is computed intrinsically from those lengths, so meshes without a 3D
//! embedding (flat tori) are handled the same way as embedded ones.

mod generators;
mod off;
mod operators;

use std::collections::HashMap;
use std::f64::consts::PI;

pub use generators::{build_flat_torus, build_icosphere, MAX_ICOSPHERE_SUBDIVISIONS};
pub use off::{load_off, parse_off, write_off};
pub use operators::{
    assemble_mass, assemble_stiffness, integrate, scalar_curvature, MassOperator,
    StiffnessOperator,
};

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<[f64; 3]>,
    faces: Vec<[usize; 3]>,
    /// `edge_lengths[f][k]` is the length of the edge opposite corner `k`.
    edge_lengths: Vec<[f64; 3]>,
    face_areas: Vec<f64>,
    base_vertex_area: Vec<f64>,
    angle_defect: Vec<f64>,
    base_curvature: Vec<f64>,
    edge_count: usize,
}

impl Mesh {
    /// Builds a mesh whose base metric is induced by the 3D positions.
    pub fn from_positions(vertices: Vec<[f64; 3]>, faces: Vec<[usize; 3]>) -> Result<Self> {
        let lengths = faces
            .iter()
            .map(|f| {
                let [a, b, c] = f.map(|i| vertices.get(i).copied().unwrap_or([f64::NAN; 3]));
                [dist(b, c), dist(c, a), dist(a, b)]
            })
            .collect();
        Self::from_edge_lengths(vertices, faces, lengths)
    }

    /// Builds a mesh from intrinsic per-corner edge lengths. `vertices` is
    /// kept for reference only.
    pub fn from_edge_lengths(
        vertices: Vec<[f64; 3]>,
        faces: Vec<[usize; 3]>,
        edge_lengths: Vec<[f64; 3]>,
    ) -> Result<Self> {
        let n_vertices = vertices.len();
        if faces.is_empty() {
            return Err(Error::InvalidMesh("mesh has no faces".into()));
        }
        if edge_lengths.len() != faces.len() {
            return Err(Error::InvalidMesh(format!(
                "{} faces but {} edge-length triples",
                faces.len(),
                edge_lengths.len()
            )));
        }
        for (fi, f) in faces.iter().enumerate() {
            if f.iter().any(|&v| v >= n_vertices) {
                return Err(Error::InvalidMesh(format!("face {fi} references a missing vertex")));
            }
            if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
                return Err(Error::InvalidMesh(format!("face {fi} repeats a vertex")));
            }
            if edge_lengths[fi].iter().any(|&l| !(l.is_finite() && l > 0.0)) {
                return Err(Error::InvalidMesh(format!("face {fi} has a non-positive edge length")));
            }
        }
        let edge_count = check_closed_orientable(&faces, &edge_lengths)?;

        let face_areas: Vec<f64> = edge_lengths.iter().map(|&l| triangle_area(l)).collect();
        let mut base_vertex_area = vec![0.0; n_vertices];
        let mut angle_sum = vec![0.0; n_vertices];
        for (f, (l, &area)) in faces.iter().zip(edge_lengths.iter().zip(&face_areas)) {
            let angles = corner_angles(*l, area);
            for k in 0..3 {
                base_vertex_area[f[k]] += area / 3.0;
                angle_sum[f[k]] += angles[k];
            }
        }
        if let Some(v) = base_vertex_area.iter().position(|&a| !(a > 0.0)) {
            return Err(Error::InvalidMesh(format!("vertex {v} has no positive incident area")));
        }
        let angle_defect: Vec<f64> = angle_sum.iter().map(|s| 2.0 * PI - s).collect();
        let base_curvature =
            angle_defect.iter().zip(&base_vertex_area).map(|(d, a)| d / a).collect();

        Ok(Mesh {
            vertices,
            faces,
            edge_lengths,
            face_areas,
            base_vertex_area,
            angle_defect,
            base_curvature,
            edge_count,
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edge_count
    }

    pub fn vertices(&self) -> &[[f64; 3]] {
        &self.vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn edge_lengths(&self) -> &[[f64; 3]] {
        &self.edge_lengths
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    /// Barycentric lumped area of each vertex under `g0`.
    pub fn base_vertex_area(&self) -> &[f64] {
        &self.base_vertex_area
    }

    /// `2π` minus the sum of incident corner angles.
    pub fn angle_defect(&self) -> &[f64] {
        &self.angle_defect
    }

    /// Gaussian curvature `K0 = angle defect / lumped area`.
    pub fn base_curvature(&self) -> &[f64] {
        &self.base_curvature
    }

    pub fn euler_characteristic(&self) -> i64 {
        self.vertices.len() as i64 - self.edge_count as i64 + self.faces.len() as i64
    }

    pub fn total_base_area(&self) -> f64 {
        self.face_areas.iter().sum()
    }

    /// Cotangents of the three corner angles of face `f`.
    pub fn face_cotangents(&self, f: usize) -> [f64; 3] {
        let [a, b, c] = self.edge_lengths[f];
        let four_area = 4.0 * self.face_areas[f];
        [
            (b * b + c * c - a * a) / four_area,
            (c * c + a * a - b * b) / four_area,
            (a * a + b * b - c * c) / four_area,
        ]
    }

    /// Squared `g0`-norm of the gradient of the piecewise-linear
    /// interpolant of `field` on face `f`.
    pub fn face_gradient_norm_sq(&self, f: usize, field: &[f64]) -> f64 {
        let [i, j, k] = self.faces[f];
        let cot = self.face_cotangents(f);
        let (fi, fj, fk) = (field[i], field[j], field[k]);
        // |∇φ|² A = ½ Σ_edges cot(opposite) (Δφ)²
        let e = 0.5
            * (cot[0] * (fj - fk).powi(2) + cot[1] * (fk - fi).powi(2) + cot[2] * (fi - fj).powi(2));
        e / self.face_areas[f]
    }
}

fn dist(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

/// Kahan's numerically stable Heron formula.
fn triangle_area(l: [f64; 3]) -> f64 {
    let mut s = l;
    s.sort_by(|x, y| y.total_cmp(x));
    let [a, b, c] = s;
    let p = (a + (b + c)) * (c - (a - b)) * (c + (a - b)) * (a + (b - c));
    0.25 * p.max(0.0).sqrt()
}

fn corner_angles(l: [f64; 3], area: f64) -> [f64; 3] {
    let [a, b, c] = l;
    let four_area = 4.0 * area;
    [
        four_area.atan2(b * b + c * c - a * a),
        four_area.atan2(c * c + a * a - b * b),
        four_area.atan2(a * a + b * b - c * c),
    ]
}

/// Every undirected edge must appear in exactly two faces with opposite
/// orientations and agreeing lengths. Returns the edge count.
fn check_closed_orientable(faces: &[[usize; 3]], lengths: &[[f64; 3]]) -> Result<usize> {
    let mut directed: HashMap<(usize, usize), (usize, f64)> = HashMap::with_capacity(faces.len() * 3);
    for (fi, f) in faces.iter().enumerate() {
        for k in 0..3 {
            let (a, b) = (f[(k + 1) % 3], f[(k + 2) % 3]);
            if directed.insert((a, b), (fi, lengths[fi][k])).is_some() {
                return Err(Error::InvalidMesh(format!(
                    "directed edge ({a}, {b}) appears twice; mesh is non-manifold or inconsistently oriented"
                )));
            }
        }
    }
    for (&(a, b), &(fi, len)) in &directed {
        match directed.get(&(b, a)) {
            None => {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) of face {fi} is a boundary edge; mesh must be closed"
                )))
            }
            Some(&(_, other)) if (len - other).abs() > 1e-9 * len.max(other) => {
                return Err(Error::InvalidMesh(format!(
                    "edge ({a}, {b}) has inconsistent lengths {len} and {other}"
                )))
            }
            _ => {}
        }
    }
    Ok(directed.len() / 2)
}
