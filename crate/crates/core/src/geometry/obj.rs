//! Minimal Wavefront OBJ reader: `v` and `f` records only.
//!
//! Supported subset: UTF-8 text, `v x y z`, `f i j k ...` with 1-based
//! indices (an optional `/vt/vn` suffix per face token is accepted and
//! discarded), `#` comments. Faces with more than three corners are split
//! into a triangle fan in corner order. Every other record type (`vn`,
//! `vt`, `o`, `g`, `s`, `usemtl`, `mtllib`, ...) is ignored: silhouettes
//! need geometry only.

use std::io::{BufRead, BufReader, Read};

use nalgebra::Vector3;

use super::{GeometryError, Mesh};

fn parse_err(line: usize, msg: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        line,
        msg: msg.into(),
    }
}

/// Reads a mesh from an OBJ-subset byte stream.
///
/// The returned mesh is not normalized; run
/// [`normalize_to_unit_sphere`](super::normalize_to_unit_sphere) before
/// rendering. Face indices are validated against the full vertex list after
/// parsing, so forward references are allowed.
pub fn load_mesh(source: impl Read, name: impl Into<String>) -> Result<Mesh, GeometryError> {
    let reader = BufReader::new(source);
    let mut vertices: Vec<Vector3<f64>> = Vec::new();
    // (corner indices, line number) per face; validated once counts are known
    let mut faces: Vec<(Vec<usize>, usize)> = Vec::new();

    for (idx, line) in reader.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let line = line.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        let record = tokens.next().unwrap();
        match record {
            "v" => {
                let coords: Vec<&str> = tokens.collect();
                if coords.len() != 3 {
                    return Err(parse_err(
                        lineno,
                        format!(
                            "`v` record needs exactly 3 coordinates, got {}",
                            coords.len()
                        ),
                    ));
                }
                let mut xyz = [0.0f64; 3];
                for (slot, tok) in xyz.iter_mut().zip(&coords) {
                    *slot = tok
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad coordinate {tok:?}")))?;
                }
                vertices.push(Vector3::new(xyz[0], xyz[1], xyz[2]));
            }
            "f" => {
                let mut corners = Vec::new();
                for tok in tokens {
                    // `i`, `i/t`, `i/t/n`, `i//n` — only the vertex index counts
                    let vert = tok.split('/').next().unwrap_or("");
                    let index: i64 = vert
                        .parse()
                        .map_err(|_| parse_err(lineno, format!("bad face index {tok:?}")))?;
                    if index < 1 {
                        return Err(parse_err(
                            lineno,
                            format!("face index {index} not 1-based positive"),
                        ));
                    }
                    corners.push(index as usize - 1);
                }
                if corners.len() < 3 {
                    return Err(parse_err(
                        lineno,
                        format!("`f` record needs at least 3 corners, got {}", corners.len()),
                    ));
                }
                faces.push((corners, lineno));
            }
            _ => {} // outside the subset, ignored
        }
    }

    let mut triangles = Vec::new();
    for (corners, lineno) in faces {
        if corners.iter().any(|&c| c >= vertices.len()) {
            return Err(parse_err(
                lineno,
                format!("face index out of range (vertex count {})", vertices.len()),
            ));
        }
        for i in 1..corners.len() - 1 {
            let tri = [corners[0], corners[i], corners[i + 1]];
            if tri[0] == tri[1] || tri[1] == tri[2] || tri[0] == tri[2] {
                return Err(parse_err(lineno, "face repeats a vertex index"));
            }
            triangles.push(tri);
        }
    }
    if triangles.is_empty() {
        return Err(GeometryError::EmptyMesh);
    }
    Mesh::new(vertices, triangles, name)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn load(text: &str) -> Result<Mesh, GeometryError> {
        load_mesh(text.as_bytes(), "test")
    }

    #[test]
    fn minimal_triangle() {
        let mesh = load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 3\n").unwrap();
        assert_eq!(mesh.vertices().len(), 3);
        assert_eq!(mesh.triangles(), &[[0, 1, 2]]);
    }

    #[test]
    fn quad_becomes_fan() {
        let mesh = load("v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n").unwrap();
        assert_eq!(mesh.triangles(), &[[0, 1, 2], [0, 2, 3]]);
    }

    #[test]
    fn index_out_of_range_reports_line() {
        let err = load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 2 9\n").unwrap_err();
        match err {
            GeometryError::Parse { line, msg } => {
                assert_eq!(line, 4);
                assert!(msg.contains("out of range"), "{msg}");
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn comments_blank_lines_and_foreign_records_ignored() {
        let text = "# header\n\nvn 0 0 1\nvt 0.5 0.5\no thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2/2/1 3/3/1\n";
        let mesh = load(text).unwrap();
        assert_eq!(mesh.triangles().len(), 1);
    }

    #[test]
    fn zero_faces_is_empty_mesh() {
        assert!(matches!(
            load("v 0 0 0\nv 1 0 0\n"),
            Err(GeometryError::EmptyMesh)
        ));
    }

    #[test]
    fn malformed_vertex_reports_line() {
        let err = load("v 0 0\nf 1 2 3\n").unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 1, .. }));
        let err = load("v 0 0 zebra\n").unwrap_err();
        assert!(matches!(err, GeometryError::Parse { line: 1, .. }));
    }

    #[test]
    fn zero_and_negative_indices_rejected() {
        assert!(load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 0 1 2\n").is_err());
        assert!(load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf -1 -2 -3\n").is_err());
    }

    #[test]
    fn degenerate_face_rejected() {
        assert!(load("v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1 1 2\n").is_err());
    }

    #[test]
    fn forward_face_reference_allowed() {
        let mesh = load("f 1 2 3\nv 0 0 0\nv 1 0 0\nv 0 1 0\n").unwrap();
        assert_eq!(mesh.triangles().len(), 1);
    }
}
