use std::path::Path;

use super::Mesh;
use crate::error::{Error, Result};

/// Reads an ASCII OFF file of triangles.
pub fn load_off(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    parse_off(&text).map_err(|e| match e {
        Error::Parse { line, message, .. } => Error::Parse { path: path.to_path_buf(), line, message },
        other => other,
    })
}

pub fn parse_off(text: &str) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::Parse { path: "<off>".into(), line, message };

    // comments start with '#'; blank lines are skipped
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (n, header) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
    let mut header_tokens = header.split_whitespace();
    if header_tokens.next() != Some("OFF") {
        return Err(err(n, format!("expected 'OFF' header, found {header:?}")));
    }
    // counts may share the header line
    let rest: Vec<&str> = header_tokens.collect();
    let (count_line, counts) = if rest.is_empty() {
        let (n, l) = lines.next().ok_or_else(|| err(n, "missing counts line".into()))?;
        (n, l.split_whitespace().collect::<Vec<_>>())
    } else {
        (n, rest)
    };
    if counts.len() < 2 {
        return Err(err(count_line, "counts line needs vertex and face counts".into()));
    }
    let parse_count = |s: &str| s.parse::<usize>().map_err(|e| err(count_line, format!("bad count {s:?}: {e}")));
    let n_vertices = parse_count(counts[0])?;
    let n_faces = parse_count(counts[1])?;

    let mut vertices = Vec::with_capacity(n_vertices);
    for _ in 0..n_vertices {
        let (n, l) = lines.next().ok_or_else(|| err(count_line, "unexpected end of file in vertex list".into()))?;
        let coords: Vec<f64> = l
            .split_whitespace()
            .take(3)
            .map(|s| s.parse::<f64>().map_err(|e| err(n, format!("bad coordinate {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if coords.len() != 3 {
            return Err(err(n, "vertex line needs three coordinates".into()));
        }
        vertices.push([coords[0], coords[1], coords[2]]);
    }

    let mut faces = Vec::with_capacity(n_faces);
    for _ in 0..n_faces {
        let (n, l) = lines.next().ok_or_else(|| err(count_line, "unexpected end of file in face list".into()))?;
        let idx: Vec<usize> = l
            .split_whitespace()
            .map(|s| s.parse::<usize>().map_err(|e| err(n, format!("bad index {s:?}: {e}"))))
            .collect::<Result<_>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(err(n, "only triangular faces ('3 i j k') are supported".into()));
        }
        if idx[1..4].iter().any(|&i| i >= n_vertices) {
            return Err(err(n, format!("face index out of range (vertex count {n_vertices})")));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }

    Mesh::from_positions(vertices, faces)
}

/// Writes a mesh in ASCII OFF format.
pub fn write_off(mesh: &Mesh) -> String {
    let mut out = format!("OFF\n{} {} {}\n", mesh.vertex_count(), mesh.face_count(), mesh.edge_count());
    for p in mesh.vertices() {
        out.push_str(&format!("{} {} {}\n", p[0], p[1], p[2]));
    }
    for f in mesh.faces() {
        out.push_str(&format!("3 {} {} {}\n", f[0], f[1], f[2]));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::build_icosphere;

    const TETRA: &str = "OFF
# regular tetrahedron
4 4 6
1 1 1
1 -1 -1
-1 1 -1
-1 -1 1
3 0 1 2
3 0 3 1
3 0 2 3
3 1 3 2
";

    #[test]
    fn parses_tetrahedron() {
        let m = parse_off(TETRA).unwrap();
        assert_eq!((m.vertex_count(), m.face_count(), m.euler_characteristic()), (4, 4, 2));
    }

    #[test]
    fn roundtrips_icosphere() {
        let m = build_icosphere(1, 1.0).unwrap();
        let back = parse_off(&write_off(&m)).unwrap();
        assert_eq!(back.faces(), m.faces());
        assert_eq!(back.vertices(), m.vertices());
    }

    #[test]
    fn rejects_quads_with_line_number() {
        let text = TETRA.replace("3 1 3 2", "4 1 3 2 0");
        match parse_off(&text) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 11),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_missing_header() {
        assert!(matches!(parse_off("4 4 6\n"), Err(Error::Parse { line: 1, .. })));
    }
}
