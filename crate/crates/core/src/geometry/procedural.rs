//! Built-in test meshes with known symmetry: icosphere, cube, L-bracket.
//!
//! All generators return meshes already normalized into the unit sphere.
//! They are addressable by name (`icosphere:3`, `cube`, `lbracket`) so the
//! CLI can run without mesh assets.

use nalgebra::Vector3;
use std::collections::HashMap;

use super::{normalize_to_unit_sphere, GeometryError, Mesh};

/// Resolves `icosphere:N`, `cube` or `lbracket`; anything else errors.
pub fn mesh_from_name(name: &str) -> Result<Mesh, GeometryError> {
    if let Some(level) = name.strip_prefix("icosphere:") {
        let level: u32 = level
            .parse()
            .map_err(|_| GeometryError::UnknownProcedural(name.to_string()))?;
        if level > 6 {
            return Err(GeometryError::UnknownProcedural(name.to_string()));
        }
        return icosphere(level);
    }
    match name {
        "cube" => cube(),
        "lbracket" => lbracket(),
        _ => Err(GeometryError::UnknownProcedural(name.to_string())),
    }
}

/// Unit icosphere: an icosahedron subdivided `level` times, every vertex
/// projected onto the unit sphere. 20 * 4^level triangles.
pub fn icosphere(level: u32) -> Result<Mesh, GeometryError> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<Vector3<f64>> = vec![
        Vector3::new(-1.0, phi, 0.0),
        Vector3::new(1.0, phi, 0.0),
        Vector3::new(-1.0, -phi, 0.0),
        Vector3::new(1.0, -phi, 0.0),
        Vector3::new(0.0, -1.0, phi),
        Vector3::new(0.0, 1.0, phi),
        Vector3::new(0.0, -1.0, -phi),
        Vector3::new(0.0, 1.0, -phi),
        Vector3::new(phi, 0.0, -1.0),
        Vector3::new(phi, 0.0, 1.0),
        Vector3::new(-phi, 0.0, -1.0),
        Vector3::new(-phi, 0.0, 1.0),
    ]
    .into_iter()
    .map(|v| v.normalize())
    .collect();

    let mut triangles: Vec<[usize; 3]> = vec![
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

    for _ in 0..level {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut next = Vec::with_capacity(triangles.len() * 4);
        for tri in &triangles {
            let mut mid = [0usize; 3];
            for e in 0..3 {
                let (a, b) = (tri[e], tri[(e + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[e] = *midpoints.entry(key).or_insert_with(|| {
                    let m = ((vertices[a] + vertices[b]) / 2.0).normalize();
                    vertices.push(m);
                    vertices.len() - 1
                });
            }
            next.push([tri[0], mid[0], mid[2]]);
            next.push([tri[1], mid[1], mid[0]]);
            next.push([tri[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        triangles = next;
    }

    let mesh = Mesh::new(vertices, triangles, format!("icosphere:{level}"))?;
    normalize_to_unit_sphere(&mesh)
}

/// Axis-aligned box triangulation between two opposite corners.
fn box_triangles(
    min: Vector3<f64>,
    max: Vector3<f64>,
    vertices: &mut Vec<Vector3<f64>>,
    triangles: &mut Vec<[usize; 3]>,
) {
    let base = vertices.len();
    for &x in &[min.x, max.x] {
        for &y in &[min.y, max.y] {
            for &z in &[min.z, max.z] {
                vertices.push(Vector3::new(x, y, z));
            }
        }
    }
    // corner order: index bit pattern xyz (x*4 + y*2 + z)
    const FACES: [[usize; 4]; 6] = [
        [0, 1, 3, 2], // -x
        [4, 6, 7, 5], // +x
        [0, 4, 5, 1], // -y
        [2, 3, 7, 6], // +y
        [0, 2, 6, 4], // -z
        [1, 5, 7, 3], // +z
    ];
    for face in FACES {
        triangles.push([base + face[0], base + face[1], base + face[2]]);
        triangles.push([base + face[0], base + face[2], base + face[3]]);
    }
}

/// Axis-aligned unit-sphere cube, corners at (+-1/sqrt(3))^3.
pub fn cube() -> Result<Mesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    box_triangles(
        Vector3::new(-1.0, -1.0, -1.0),
        Vector3::new(1.0, 1.0, 1.0),
        &mut vertices,
        &mut triangles,
    );
    let mesh = Mesh::new(vertices, triangles, "cube")?;
    normalize_to_unit_sphere(&mesh)
}

/// Asymmetric L-shaped bracket: a tall arm along y with a foot running out
/// along +x. Distinct silhouettes from almost every ring direction.
pub fn lbracket() -> Result<Mesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    box_triangles(
        Vector3::new(-0.2, -1.0, -0.25),
        Vector3::new(0.2, 1.0, 0.25),
        &mut vertices,
        &mut triangles,
    );
    box_triangles(
        Vector3::new(-0.2, -1.0, -0.25),
        Vector3::new(1.0, -0.55, 0.25),
        &mut vertices,
        &mut triangles,
    );
    let mesh = Mesh::new(vertices, triangles, "lbracket")?;
    normalize_to_unit_sphere(&mesh)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn icosphere_level_counts() {
        let m0 = icosphere(0).unwrap();
        assert_eq!(m0.vertices().len(), 12);
        assert_eq!(m0.triangles().len(), 20);
        let m3 = icosphere(3).unwrap();
        assert_eq!(m3.triangles().len(), 20 * 4usize.pow(3));
        assert_eq!(m3.vertices().len(), 642); // V = E/2 + 2... Euler on refined icosahedron
    }

    #[test]
    fn icosphere_vertices_on_unit_sphere() {
        let mesh = icosphere(2).unwrap();
        for v in mesh.vertices() {
            assert!((v.norm() - 1.0).abs() < 1e-9, "norm {}", v.norm());
        }
    }

    #[test]
    fn cube_is_normalized() {
        let mesh = cube().unwrap();
        assert_eq!(mesh.vertices().len(), 8);
        assert_eq!(mesh.triangles().len(), 12);
        let c = 1.0 / 3f64.sqrt();
        for v in mesh.vertices() {
            assert!((v.x.abs() - c).abs() < 1e-12);
        }
    }

    #[test]
    fn lbracket_normalized_and_asymmetric() {
        let mesh = lbracket().unwrap();
        assert!((mesh.max_vertex_norm() - 1.0).abs() <= 1e-9);
        assert!(mesh.centroid().norm() <= 1e-9);
        // foot only on one side: x extent asymmetric before normalization
        let max_x = mesh.vertices().iter().map(|v| v.x).fold(f64::MIN, f64::max);
        let min_x = mesh.vertices().iter().map(|v| v.x).fold(f64::MAX, f64::min);
        assert!(max_x > -min_x + 0.1);
    }

    #[test]
    fn names_resolve() {
        assert_eq!(mesh_from_name("cube").unwrap().name(), "cube");
        assert_eq!(mesh_from_name("lbracket").unwrap().name(), "lbracket");
        assert_eq!(mesh_from_name("icosphere:2").unwrap().name(), "icosphere:2");
        assert!(mesh_from_name("teapot").is_err());
        assert!(mesh_from_name("icosphere:banana").is_err());
    }
}
