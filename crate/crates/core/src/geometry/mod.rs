//! Triangle meshes and viewpoint sets on the unit view sphere.
//!
//! The world object is a triangle mesh normalized to sit inside the unit
//! sphere: vertex centroid at the origin, farthest vertex at distance 1.
//! Viewpoints are unit directions from the origin to a camera that looks
//! back at the origin.
//!
//! Axis convention (documented, not canonical): the ground plane is `y = 0`
//! and the world up axis is `+y`. A ring viewpoint at angle `theta` degrees
//! has direction `(cos theta, 0, sin theta)` and up `(0, 1, 0)`.

mod obj;
mod procedural;

pub use obj::load_mesh;
pub use procedural::{cube, icosphere, lbracket, mesh_from_name};

use nalgebra::Vector3;
use thiserror::Error;

/// Unit-vector and orthogonality tolerance used by viewpoint validation.
pub const UNIT_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("parse error at line {line}: {msg}")]
    Parse { line: usize, msg: String },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("degenerate mesh: all vertices coincident, scale undefined")]
    DegenerateMesh,
    #[error("invalid mesh: {0}")]
    InvalidMesh(String),
    #[error("increment {0} does not divide {1} exactly")]
    InvalidIncrement(f64, f64),
    #[error("viewpoint vectors not orthonormal: {0}")]
    BadViewpoint(String),
    #[error("unknown procedural mesh {0:?}")]
    UnknownProcedural(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A triangle mesh in dimensionless model units.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    vertices: Vec<Vector3<f64>>,
    triangles: Vec<[usize; 3]>,
    name: String,
}

impl Mesh {
    /// Builds a mesh, validating index bounds and rejecting degenerate
    /// triangles (two equal indices) and empty triangle lists.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        name: impl Into<String>,
    ) -> Result<Self, GeometryError> {
        if triangles.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        for (i, t) in triangles.iter().enumerate() {
            if t.iter().any(|&v| v >= vertices.len()) {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {i} references vertex out of range (vertex count {})",
                    vertices.len()
                )));
            }
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(GeometryError::InvalidMesh(format!(
                    "triangle {i} repeats a vertex index"
                )));
            }
        }
        Ok(Self {
            vertices,
            triangles,
            name: name.into(),
        })
    }

    pub fn vertices(&self) -> &[Vector3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Arithmetic mean of the vertex positions.
    pub fn centroid(&self) -> Vector3<f64> {
        let sum: Vector3<f64> = self.vertices.iter().sum();
        sum / self.vertices.len() as f64
    }

    /// Largest vertex distance from the origin.
    pub fn max_vertex_norm(&self) -> f64 {
        self.vertices.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }
}

/// Translates the vertex centroid to the origin and scales uniformly so the
/// farthest vertex lies at distance exactly 1. Idempotent up to 1e-9.
pub fn normalize_to_unit_sphere(mesh: &Mesh) -> Result<Mesh, GeometryError> {
    let centroid = mesh.centroid();
    let max_norm = mesh
        .vertices
        .iter()
        .map(|v| (v - centroid).norm())
        .fold(0.0, f64::max);
    if max_norm <= 0.0 {
        return Err(GeometryError::DegenerateMesh);
    }
    let scale = 1.0 / max_norm;
    let vertices = mesh
        .vertices
        .iter()
        .map(|v| (v - centroid) * scale)
        .collect();
    Ok(Mesh {
        vertices,
        triangles: mesh.triangles.clone(),
        name: mesh.name.clone(),
    })
}

/// A camera position on the unit view sphere, looking at the origin.
///
/// `direction` points from the origin to the camera; `up` fixes the in-plane
/// image orientation. `ring_angle` is set when the viewpoint belongs to a
/// ground-plane ring.
#[derive(Debug, Clone, PartialEq)]
pub struct Viewpoint {
    direction: Vector3<f64>,
    up: Vector3<f64>,
    ring_angle: Option<f64>,
}

impl Viewpoint {
    /// Validates that `direction` and `up` are unit length and orthogonal
    /// (all within [`UNIT_TOL`]).
    pub fn new(
        direction: Vector3<f64>,
        up: Vector3<f64>,
        ring_angle: Option<f64>,
    ) -> Result<Self, GeometryError> {
        if (direction.norm() - 1.0).abs() > UNIT_TOL {
            return Err(GeometryError::BadViewpoint(format!(
                "|direction| = {}",
                direction.norm()
            )));
        }
        if (up.norm() - 1.0).abs() > UNIT_TOL {
            return Err(GeometryError::BadViewpoint(format!("|up| = {}", up.norm())));
        }
        let dot = direction.dot(&up);
        if dot.abs() > UNIT_TOL {
            return Err(GeometryError::BadViewpoint(format!(
                "direction . up = {dot}"
            )));
        }
        Ok(Self {
            direction,
            up,
            ring_angle,
        })
    }

    /// Ground-plane ring viewpoint at `angle_deg` degrees; the angle is
    /// normalized into [0, 360).
    pub fn on_ring(angle_deg: f64) -> Self {
        let angle = angle_deg.rem_euclid(360.0);
        let rad = angle.to_radians();
        Self {
            direction: Vector3::new(rad.cos(), 0.0, rad.sin()),
            up: Vector3::new(0.0, 1.0, 0.0),
            ring_angle: Some(angle),
        }
    }

    /// Viewpoint from a bare direction. The up vector is the tangent toward
    /// the `+y` pole; at the poles themselves it falls back to `+x`.
    pub fn from_direction(direction: Vector3<f64>) -> Result<Self, GeometryError> {
        let north = Vector3::new(0.0, 1.0, 0.0);
        let tangent = north - direction * direction.dot(&north);
        let up = if tangent.norm() > 1e-9 {
            tangent.normalize()
        } else {
            Vector3::new(1.0, 0.0, 0.0)
        };
        Self::new(direction, up, None)
    }

    pub fn direction(&self) -> Vector3<f64> {
        self.direction
    }

    pub fn up(&self) -> Vector3<f64> {
        self.up
    }

    pub fn ring_angle(&self) -> Option<f64> {
        self.ring_angle
    }
}

/// An ordered cyclic set of ground-plane viewpoints at a fixed increment.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewRing {
    increment_deg: f64,
    viewpoints: Vec<Viewpoint>,
}

impl ViewRing {
    pub fn increment_deg(&self) -> f64 {
        self.increment_deg
    }

    pub fn viewpoints(&self) -> &[Viewpoint] {
        &self.viewpoints
    }

    pub fn len(&self) -> usize {
        self.viewpoints.len()
    }

    pub fn is_empty(&self) -> bool {
        self.viewpoints.is_empty()
    }
}

/// Number of steps if `increment` divides `span` exactly, else an error.
/// Rejecting non-divisors keeps ring cyclicity exact.
fn exact_divisions(span: f64, increment: f64) -> Result<usize, GeometryError> {
    if increment <= 0.0 || !increment.is_finite() {
        return Err(GeometryError::InvalidIncrement(increment, span));
    }
    let n = (span / increment).round();
    if n < 1.0 || (n * increment - span).abs() > 1e-9 {
        return Err(GeometryError::InvalidIncrement(increment, span));
    }
    Ok(n as usize)
}

/// Viewpoints on the ground-plane great circle (`y = 0`), one per
/// `increment_deg` step, up = `+y`.
pub fn ring_viewpoints(increment_deg: f64) -> Result<ViewRing, GeometryError> {
    let count = exact_divisions(360.0, increment_deg)?;
    let viewpoints = (0..count)
        .map(|i| Viewpoint::on_ring(i as f64 * increment_deg))
        .collect();
    Ok(ViewRing {
        increment_deg,
        viewpoints,
    })
}

/// Latitude-longitude sampling of the full view sphere plus the two poles.
///
/// Each sample carries the fraction of total spherical area its
/// latitude-longitude cell represents, so the weights sum to 1. Latitude
/// bands are centered on the sample latitude and poles own the residual
/// caps, which tiles the sphere exactly.
pub fn sphere_viewpoints(increment_deg: f64) -> Result<Vec<(Viewpoint, f64)>, GeometryError> {
    let lon_count = exact_divisions(360.0, increment_deg)?;
    let lat_steps = exact_divisions(180.0, increment_deg)?;
    let lat_count = lat_steps - 1; // interior latitudes, poles handled apart

    let mut out = Vec::with_capacity(lat_count * lon_count + 2);
    let half = increment_deg / 2.0;
    for i in 1..lat_steps {
        let lat = -90.0 + i as f64 * increment_deg;
        // Spherical zone between the two half-step latitudes, split evenly
        // over the longitudes: (sin(hi) - sin(lo)) / 2 of the sphere.
        let zone = ((lat + half).to_radians().sin() - (lat - half).to_radians().sin()) / 2.0;
        let weight = zone / lon_count as f64;
        let (lat_sin, lat_cos) = (lat.to_radians().sin(), lat.to_radians().cos());
        for j in 0..lon_count {
            let lon = (j as f64 * increment_deg).to_radians();
            let direction = Vector3::new(lat_cos * lon.cos(), lat_sin, lat_cos * lon.sin());
            out.push((Viewpoint::from_direction(direction.normalize())?, weight));
        }
    }
    // Polar caps above/below the outermost half-step latitudes.
    let cap = (1.0 - (90.0 - half).to_radians().sin()) / 2.0;
    out.push((Viewpoint::from_direction(Vector3::new(0.0, 1.0, 0.0))?, cap));
    out.push((
        Viewpoint::from_direction(Vector3::new(0.0, -1.0, 0.0))?,
        cap,
    ));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn tri_mesh(vertices: Vec<Vector3<f64>>) -> Mesh {
        Mesh::new(vertices, vec![[0, 1, 2]], "t").unwrap()
    }

    #[test]
    fn mesh_rejects_out_of_range_index() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        let err = Mesh::new(verts, vec![[0, 1, 5]], "bad").unwrap_err();
        assert!(matches!(err, GeometryError::InvalidMesh(_)));
    }

    #[test]
    fn mesh_rejects_repeated_index_and_empty() {
        let verts = vec![
            Vector3::new(0.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
        ];
        assert!(matches!(
            Mesh::new(verts.clone(), vec![[0, 0, 2]], "bad"),
            Err(GeometryError::InvalidMesh(_))
        ));
        assert!(matches!(
            Mesh::new(verts, vec![], "bad"),
            Err(GeometryError::EmptyMesh)
        ));
    }

    #[test]
    fn normalize_cube_hits_unit_corners() {
        let mut verts = Vec::new();
        for &x in &[-2.0, 2.0] {
            for &y in &[-2.0, 2.0] {
                for &z in &[-2.0, 2.0] {
                    verts.push(Vector3::new(x, y, z));
                }
            }
        }
        let mesh = Mesh::new(verts, vec![[0, 1, 2]], "cube8").unwrap();
        let norm = normalize_to_unit_sphere(&mesh).unwrap();
        let c = 1.0 / 3f64.sqrt();
        for v in norm.vertices() {
            assert_abs_diff_eq!(v.x.abs(), c, epsilon = 1e-12);
            assert_abs_diff_eq!(v.y.abs(), c, epsilon = 1e-12);
            assert_abs_diff_eq!(v.z.abs(), c, epsilon = 1e-12);
            assert_abs_diff_eq!(v.norm(), 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn normalize_is_idempotent() {
        let mesh = tri_mesh(vec![
            Vector3::new(3.0, -1.0, 2.0),
            Vector3::new(-4.0, 2.0, 0.5),
            Vector3::new(0.25, 7.0, -3.0),
        ]);
        let once = normalize_to_unit_sphere(&mesh).unwrap();
        let twice = normalize_to_unit_sphere(&once).unwrap();
        for (a, b) in once.vertices().iter().zip(twice.vertices()) {
            assert!((a - b).norm() <= 1e-9);
        }
    }

    #[test]
    fn normalize_random_mesh_centroid_and_norm() {
        // Direct scan over the output vertices is the oracle here.
        let mut state = 0x2545F4914F6CDD1Du64;
        let mut next = || {
            // xorshift64*, plenty for test fixtures
            state ^= state >> 12;
            state ^= state << 25;
            state ^= state >> 27;
            (state.wrapping_mul(0x2545F4914F6CDD1D) >> 11) as f64 / (1u64 << 53) as f64
        };
        let verts: Vec<_> = (0..50)
            .map(|_| Vector3::new(next() * 10.0 - 5.0, next() * 8.0 + 1.0, next() * 6.0 - 9.0))
            .collect();
        let mesh = Mesh::new(verts, vec![[0, 1, 2], [3, 4, 5]], "rand50").unwrap();
        let norm = normalize_to_unit_sphere(&mesh).unwrap();
        let centroid = norm.centroid();
        assert!(centroid.norm() <= 1e-9, "centroid {centroid:?}");
        let max = norm.max_vertex_norm();
        assert!((max - 1.0).abs() <= 1e-9, "max norm {max}");
    }

    #[test]
    fn normalize_rejects_coincident_vertices() {
        let mesh = tri_mesh(vec![
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, 1.0, 1.0),
            Vector3::new(1.0, 1.0, 1.0),
        ]);
        assert!(matches!(
            normalize_to_unit_sphere(&mesh),
            Err(GeometryError::DegenerateMesh)
        ));
    }

    #[test]
    fn ring_counts_and_angles() {
        assert_eq!(ring_viewpoints(5.0).unwrap().len(), 72);
        let ring = ring_viewpoints(90.0).unwrap();
        assert_eq!(ring.len(), 4);
        let angles: Vec<f64> = ring
            .viewpoints()
            .iter()
            .map(|v| v.ring_angle().unwrap())
            .collect();
        assert_eq!(angles, vec![0.0, 90.0, 180.0, 270.0]);
    }

    #[test]
    fn ring_rejects_non_divisor() {
        assert!(matches!(
            ring_viewpoints(7.0),
            Err(GeometryError::InvalidIncrement(_, _))
        ));
    }

    #[test]
    fn ring_directions_ground_plane_distinct_orthogonal() {
        let ring = ring_viewpoints(5.0).unwrap();
        for (i, v) in ring.viewpoints().iter().enumerate() {
            assert!(v.direction().y.abs() <= 1e-9);
            assert!((v.direction().norm() - 1.0).abs() <= 1e-9);
            assert!(v.direction().dot(&v.up()).abs() <= 1e-9);
            for w in &ring.viewpoints()[i + 1..] {
                assert!((v.direction() - w.direction()).norm() > 1e-6);
            }
        }
        // consecutive separation is the increment, within 1e-6 degrees
        let n = ring.len();
        for i in 0..n {
            let a = ring.viewpoints()[i].direction();
            let b = ring.viewpoints()[(i + 1) % n].direction();
            let angle = a.dot(&b).clamp(-1.0, 1.0).acos().to_degrees();
            assert!((angle - 5.0).abs() <= 1e-6, "step {i}: {angle}");
        }
    }

    #[test]
    fn sphere_sample_counts() {
        assert_eq!(sphere_viewpoints(90.0).unwrap().len(), 6);
        assert_eq!(sphere_viewpoints(5.0).unwrap().len(), 35 * 72 + 2);
    }

    #[test]
    fn sphere_weights_match_zone_area_oracle() {
        // Oracle: spherical zone area 2*pi*(sin hi - sin lo), as a fraction
        // of 4*pi, split evenly across the longitudes of the band.
        for &inc in &[90.0, 30.0, 10.0] {
            let samples = sphere_viewpoints(inc).unwrap();
            let lon = (360.0 / inc).round() as usize;
            let lat_steps = (180.0 / inc).round() as usize;
            let mut total = 0.0;
            for (idx, (vp, w)) in samples.iter().enumerate() {
                assert!(*w > 0.0);
                assert!((vp.direction().norm() - 1.0).abs() <= 1e-9);
                assert!(vp.direction().dot(&vp.up()).abs() <= 1e-9);
                if idx < (lat_steps - 1) * lon {
                    let band = idx / lon;
                    let lat = -90.0 + (band + 1) as f64 * inc;
                    let lo = (lat - inc / 2.0).to_radians().sin();
                    let hi = (lat + inc / 2.0).to_radians().sin();
                    let expect = (hi - lo) / 2.0 / lon as f64;
                    assert_abs_diff_eq!(*w, expect, epsilon = 1e-12);
                }
                total += w;
            }
            assert_abs_diff_eq!(total, 1.0, epsilon = 1e-9);
        }
    }

    #[test]
    fn sphere_rejects_increment_not_dividing_180() {
        // 80 divides 360? no (4.5): rejected; 120 divides 360 but not 180.
        assert!(sphere_viewpoints(80.0).is_err());
        assert!(sphere_viewpoints(120.0).is_err());
    }

    #[test]
    fn viewpoint_rejects_bad_vectors() {
        let err = Viewpoint::new(
            Vector3::new(1.0, 1.0, 0.0),
            Vector3::new(0.0, 1.0, 0.0),
            None,
        );
        assert!(err.is_err());
        let err = Viewpoint::new(
            Vector3::new(1.0, 0.0, 0.0),
            Vector3::new(1.0, 0.0, 0.0),
            None,
        );
        assert!(err.is_err());
    }
}
