use std::collections::HashMap;

use super::Mesh;
use crate::error::{Error, Result};

pub const MAX_ICOSPHERE_SUBDIVISIONS: u32 = 8;

/// Loop-style midpoint subdivision of the icosahedron, projected onto the
/// sphere of the given radius.
pub fn build_icosphere(subdivisions: u32, radius: f64) -> Result<Mesh> {
    if subdivisions > MAX_ICOSPHERE_SUBDIVISIONS {
        return Err(Error::Resource(format!(
            "icosphere subdivisions {subdivisions} exceed the limit of {MAX_ICOSPHERE_SUBDIVISIONS}"
        )));
    }
    if !(radius.is_finite() && radius > 0.0) {
        return Err(Error::input(format!("icosphere radius must be positive, got {radius}")));
    }

    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalize)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];

    for _ in 0..subdivisions {
        let mut midpoint: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        let mut mid = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| -> usize {
            let key = (a.min(b), a.max(b));
            *midpoint.entry(key).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalize([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        for &[a, b, c] in &faces {
            let ab = mid(a, b, &mut vertices);
            let bc = mid(b, c, &mut vertices);
            let ca = mid(c, a, &mut vertices);
            next.extend_from_slice(&[[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }

    let vertices = vertices.into_iter().map(|p| p.map(|x| x * radius)).collect();
    Mesh::from_positions(vertices, faces)
}

fn normalize(p: [f64; 3]) -> [f64; 3] {
    let n = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
    p.map(|x| x / n)
}

/// An `n x m` grid on the flat `l1 x l2` rectangular torus, each cell split
/// along its diagonal. The metric is carried by intrinsic edge lengths.
pub fn build_flat_torus(n: usize, m: usize, l1: f64, l2: f64) -> Result<Mesh> {
    if n < 3 || m < 3 {
        return Err(Error::input(format!("torus grid must be at least 3x3, got {n}x{m}")));
    }
    if !(l1.is_finite() && l1 > 0.0 && l2.is_finite() && l2 > 0.0) {
        return Err(Error::input(format!("torus side lengths must be positive, got {l1} x {l2}")));
    }
    let dx = l1 / n as f64;
    let dy = l2 / m as f64;
    let diag = dx.hypot(dy);
    let idx = |i: usize, j: usize| (i % n) * m + (j % m);

    let mut vertices = Vec::with_capacity(n * m);
    for i in 0..n {
        for j in 0..m {
            vertices.push([i as f64 * dx, j as f64 * dy, 0.0]);
        }
    }
    let mut faces = Vec::with_capacity(2 * n * m);
    let mut lengths = Vec::with_capacity(2 * n * m);
    for i in 0..n {
        for j in 0..m {
            let (v00, v10, v01, v11) = (idx(i, j), idx(i + 1, j), idx(i, j + 1), idx(i + 1, j + 1));
            faces.push([v00, v10, v11]);
            lengths.push([dy, diag, dx]);
            faces.push([v00, v11, v01]);
            lengths.push([dx, dy, diag]);
        }
    }
    Mesh::from_edge_lengths(vertices, faces, lengths)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosahedron_counts() {
        let m = build_icosphere(0, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.face_count(), m.euler_characteristic()), (12, 20, 2));
    }

    #[test]
    fn subdivision_recurrence() {
        // V_{k+1} = V_k + E_k, F_{k+1} = 4 F_k, E = 3F/2
        let (mut v, mut f) = (12usize, 20usize);
        for k in 0..=3u32 {
            let m = build_icosphere(k, 1.0).unwrap();
            assert_eq!((m.vertex_count(), m.face_count()), (v, f), "subdivision {k}");
            assert_eq!(m.euler_characteristic(), 2);
            v += 3 * f / 2;
            f *= 4;
        }
        let m = build_icosphere(2, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.face_count()), (162, 320));
    }

    #[test]
    fn icosphere_radius() {
        let m = build_icosphere(1, 2.0).unwrap();
        for p in m.vertices() {
            let r = (p[0] * p[0] + p[1] * p[1] + p[2] * p[2]).sqrt();
            assert!((r - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn icosphere_guard() {
        assert!(matches!(build_icosphere(9, 1.0), Err(Error::Resource(_))));
        assert!(build_icosphere(1, 0.0).is_err());
    }

    #[test]
    fn torus_counts_and_flatness() {
        let m = build_flat_torus(3, 3, 1.0, 1.0).unwrap();
        assert_eq!((m.vertex_count(), m.face_count(), m.euler_characteristic()), (9, 18, 0));

        let m = build_flat_torus(8, 8, 1.0, 1.0).unwrap();
        assert!((m.total_base_area() - 1.0).abs() < 1e-14);

        let m = build_flat_torus(8, 8, 2.0, 1.0).unwrap();
        assert!(m.base_curvature().iter().all(|k| k.abs() < 1e-12));
    }

    #[test]
    fn torus_guard() {
        assert!(build_flat_torus(2, 5, 1.0, 1.0).is_err());
        assert!(build_flat_torus(4, 4, -1.0, 1.0).is_err());
    }
}
