//! Binary silhouette rendering by orthographic software rasterization.
//!
//! A view ("aspect") is a pure function of the viewing direction: the mesh
//! is projected orthographically onto the plane orthogonal to the
//! viewpoint direction, with the viewport spanning [-1, 1]^2 — exactly the
//! extent of the unit sphere the mesh lives in. A pixel is set iff its
//! center is covered by any projected triangle; there is no anti-aliasing,
//! so identical inputs produce bit-identical images.

mod descriptor;

pub use descriptor::{descriptor_distance, extract_descriptor, ViewDescriptor};

use std::io::Write;

use nalgebra::{Vector2, Vector3};
use thiserror::Error;

use crate::geometry::{Mesh, Viewpoint};

/// Smallest supported viewport edge, in pixels.
pub const MIN_RESOLUTION: usize = 16;

/// Slack allowed on the max vertex norm before a mesh counts as
/// unnormalized.
pub const NORM_TOL: f64 = 1e-6;

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("mesh {name:?} is not normalized (max vertex norm {max_norm})")]
    UnnormalizedMesh { name: String, max_norm: f64 },
    #[error("mesh has no triangles")]
    EmptyMesh,
    #[error("resolution {0} below minimum {MIN_RESOLUTION}")]
    InvalidResolution(usize),
    #[error("grid size {0} outside [4, 32]")]
    InvalidGridSize(usize),
    #[error("silhouette is empty (no set pixels)")]
    EmptySilhouette,
    #[error("descriptor lengths differ: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("descriptor entry invalid: {0}")]
    InvalidDescriptor(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// A square binary silhouette raster together with the viewpoint that
/// produced it. Pixels are row-major, row 0 at the top (v = +1 edge).
#[derive(Debug, Clone, PartialEq)]
pub struct AspectImage {
    width: usize,
    height: usize,
    pixels: Vec<u8>,
    viewpoint: Viewpoint,
}

impl AspectImage {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    pub fn viewpoint(&self) -> &Viewpoint {
        &self.viewpoint
    }

    pub fn get(&self, row: usize, col: usize) -> u8 {
        self.pixels[row * self.width + col]
    }

    pub fn set_pixel_count(&self) -> usize {
        self.pixels.iter().filter(|&&p| p != 0).count()
    }

    /// Fraction of viewport pixels covered by the silhouette.
    pub fn fill_fraction(&self) -> f64 {
        self.set_pixel_count() as f64 / (self.width * self.height) as f64
    }

    /// Test/debug constructor from a raw 0/1 buffer.
    pub fn from_pixels(
        width: usize,
        height: usize,
        pixels: Vec<u8>,
        viewpoint: Viewpoint,
    ) -> Result<Self, RenderError> {
        if width != height || width < MIN_RESOLUTION {
            return Err(RenderError::InvalidResolution(width));
        }
        if pixels.len() != width * height || pixels.iter().any(|&p| p > 1) {
            return Err(RenderError::InvalidDescriptor(
                "pixel buffer must be width*height of 0/1 values".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            pixels,
            viewpoint,
        })
    }

    /// Binary PGM (P5) dump for visual inspection, maxval 255, set pixels
    /// written as 255.
    pub fn write_pgm(&self, mut out: impl Write) -> Result<(), RenderError> {
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        let bytes: Vec<u8> = self
            .pixels
            .iter()
            .map(|&p| if p != 0 { 255 } else { 0 })
            .collect();
        out.write_all(&bytes)?;
        Ok(())
    }
}

/// Renders the binary silhouette of `mesh` seen from `viewpoint` at
/// `resolution` x `resolution` pixels.
///
/// The mesh must already be normalized into the unit sphere; anything with
/// max vertex norm beyond 1 + 1e-6 is rejected so the fixed viewport
/// cannot silently crop geometry.
pub fn render_silhouette(
    mesh: &Mesh,
    viewpoint: &Viewpoint,
    resolution: usize,
) -> Result<AspectImage, RenderError> {
    if resolution < MIN_RESOLUTION {
        return Err(RenderError::InvalidResolution(resolution));
    }
    if mesh.triangles().is_empty() {
        return Err(RenderError::EmptyMesh);
    }
    let max_norm = mesh.max_vertex_norm();
    if max_norm > 1.0 + NORM_TOL {
        return Err(RenderError::UnnormalizedMesh {
            name: mesh.name().to_string(),
            max_norm,
        });
    }

    // Screen basis: u along right = up x direction, v along up. The camera
    // sits at +direction looking back through the origin.
    let dir: Vector3<f64> = viewpoint.direction();
    let up = viewpoint.up();
    let right = up.cross(&dir);

    let projected: Vec<Vector2<f64>> = mesh
        .vertices()
        .iter()
        .map(|p| Vector2::new(p.dot(&right), p.dot(&up)))
        .collect();

    let n = resolution;
    let mut pixels = vec![0u8; n * n];
    let step = 2.0 / n as f64;

    for tri in mesh.triangles() {
        let a = projected[tri[0]];
        let b = projected[tri[1]];
        let c = projected[tri[2]];
        let area = edge(a, b, c);
        if area == 0.0 {
            continue; // edge-on triangle, covers no area
        }

        let min_u = a.x.min(b.x).min(c.x);
        let max_u = a.x.max(b.x).max(c.x);
        let min_v = a.y.min(b.y).min(c.y);
        let max_v = a.y.max(b.y).max(c.y);

        // pixel col center u = -1 + (col + 0.5) * step; row center
        // v = 1 - (row + 0.5) * step
        let col_lo = (((min_u + 1.0) / step - 0.5).ceil().max(0.0)) as usize;
        let col_hi = (((max_u + 1.0) / step - 0.5).floor().min((n - 1) as f64)) as usize;
        let row_lo = (((1.0 - max_v) / step - 0.5).ceil().max(0.0)) as usize;
        let row_hi = (((1.0 - min_v) / step - 0.5).floor().min((n - 1) as f64)) as usize;
        if col_lo > col_hi || row_lo > row_hi {
            continue;
        }

        for row in row_lo..=row_hi {
            let v = 1.0 - (row as f64 + 0.5) * step;
            for col in col_lo..=col_hi {
                let u = -1.0 + (col as f64 + 0.5) * step;
                let p = Vector2::new(u, v);
                let e0 = edge(a, b, p);
                let e1 = edge(b, c, p);
                let e2 = edge(c, a, p);
                // inside under either winding; boundary pixels count
                if (e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0) || (e0 <= 0.0 && e1 <= 0.0 && e2 <= 0.0) {
                    pixels[row * n + col] = 1;
                }
            }
        }
    }

    Ok(AspectImage {
        width: n,
        height: n,
        pixels,
        viewpoint: viewpoint.clone(),
    })
}

/// Twice the signed area of triangle (a, b, p).
#[inline]
fn edge(a: Vector2<f64>, b: Vector2<f64>, p: Vector2<f64>) -> f64 {
    (b.x - a.x) * (p.y - a.y) - (b.y - a.y) * (p.x - a.x)
}
