//! Fixed-length view descriptors for silhouette comparison.
//!
//! A descriptor is computed on a coordinate frame whose origin is the
//! silhouette centroid, which makes it invariant to in-viewport
//! translation up to one pixel of quantization. It is NOT normalized for
//! in-plane rotation: the camera up vector is fixed, so rotation
//! distinguishes views.
//!
//! Layout: `grid_size^2` coarse occupancy fractions (row-major, over a
//! viewport-sized grid centered on the silhouette centroid), then four
//! scale-normalized moment features: area fraction, eta20+eta02,
//! |eta20-eta02|, |eta11|, where eta_pq = mu_pq / mu00^2 for the
//! second-order central moments.
//!
//! Occupancy uses bilinear splatting: each set pixel splits its unit of
//! mass between the four cells nearest to it. That keeps every entry a
//! continuous function of the silhouette's position relative to the grid,
//! so descriptors are stable when the resolution is refined even when an
//! object edge falls exactly on a cell boundary.

use super::{AspectImage, RenderError};

/// Fixed-length numeric signature of one aspect.
#[derive(Debug, Clone, PartialEq)]
pub struct ViewDescriptor {
    values: Vec<f64>,
    grid_size: usize,
}

impl ViewDescriptor {
    /// Builds a descriptor from raw values; the first `grid_size^2` entries
    /// must be occupancy fractions in [0, 1] and everything must be finite.
    pub fn new(values: Vec<f64>, grid_size: usize) -> Result<Self, RenderError> {
        if !(4..=32).contains(&grid_size) {
            return Err(RenderError::InvalidGridSize(grid_size));
        }
        if values.len() != grid_size * grid_size + 4 {
            return Err(RenderError::InvalidDescriptor(format!(
                "expected {} values, got {}",
                grid_size * grid_size + 4,
                values.len()
            )));
        }
        for (i, v) in values.iter().enumerate() {
            if !v.is_finite() {
                return Err(RenderError::InvalidDescriptor(format!("entry {i} is {v}")));
            }
            if i < grid_size * grid_size && !(0.0..=1.0).contains(v) {
                return Err(RenderError::InvalidDescriptor(format!(
                    "occupancy entry {i} = {v} outside [0, 1]"
                )));
            }
        }
        Ok(Self { values, grid_size })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn grid_size(&self) -> usize {
        self.grid_size
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Extracts the descriptor of a silhouette image.
///
/// Errors on an all-zero image (the silhouette centroid is undefined) and
/// on grid sizes outside [4, 32].
pub fn extract_descriptor(
    image: &AspectImage,
    grid_size: usize,
) -> Result<ViewDescriptor, RenderError> {
    if !(4..=32).contains(&grid_size) {
        return Err(RenderError::InvalidGridSize(grid_size));
    }
    let (w, h) = (image.width(), image.height());

    // silhouette centroid in pixel index coordinates (col, row)
    let mut count = 0usize;
    let (mut sum_col, mut sum_row) = (0.0f64, 0.0f64);
    for row in 0..h {
        for col in 0..w {
            if image.get(row, col) != 0 {
                count += 1;
                sum_col += col as f64;
                sum_row += row as f64;
            }
        }
    }
    if count == 0 {
        return Err(RenderError::EmptySilhouette);
    }
    let cx = sum_col / count as f64;
    let cy = sum_row / count as f64;

    // Occupancy over a viewport-sized grid whose origin sits at the exact
    // (fractional) centroid, so the binning is independent of where the
    // silhouette lies in the frame. Each set pixel splats bilinearly into
    // the four nearest cells; mass aimed past the grid edge is clamped
    // into the border cells.
    let g = grid_size;
    let cell_w = w as f64 / g as f64;
    let cell_h = h as f64 / g as f64;
    let mut mass = vec![0.0f64; g * g];
    let (mut mu20, mut mu02, mut mu11) = (0.0f64, 0.0f64, 0.0f64);
    for row in 0..h {
        let dy = row as f64 - cy;
        for col in 0..w {
            if image.get(row, col) != 0 {
                let dx = col as f64 - cx;
                mu20 += dx * dx;
                mu02 += dy * dy;
                mu11 += dx * dy;
                // fractional position in cell-center coordinates
                let s = (dx + w as f64 / 2.0) / cell_w - 0.5;
                let t = (dy + h as f64 / 2.0) / cell_h - 0.5;
                let (j0, i0) = (s.floor(), t.floor());
                let (fs, ft) = (s - j0, t - i0);
                for (di, wt_row) in [(0i64, 1.0 - ft), (1, ft)] {
                    for (dj, wt_col) in [(0i64, 1.0 - fs), (1, fs)] {
                        let ci = (i0 as i64 + di).clamp(0, g as i64 - 1) as usize;
                        let cj = (j0 as i64 + dj).clamp(0, g as i64 - 1) as usize;
                        mass[ci * g + cj] += wt_row * wt_col;
                    }
                }
            }
        }
    }

    let capacity = cell_w * cell_h;
    let mut values = Vec::with_capacity(g * g + 4);
    values.extend(mass.iter().map(|m| (m / capacity).min(1.0)));

    let mu00 = count as f64;
    let norm = mu00 * mu00;
    values.push(mu00 / (w * h) as f64); // area fraction
    values.push((mu20 + mu02) / norm);
    values.push((mu20 - mu02).abs() / norm);
    values.push(mu11.abs() / norm);

    ViewDescriptor::new(values, g)
}

/// Euclidean distance between two descriptors, normalized by sqrt(D) so
/// values are comparable across grid sizes.
pub fn descriptor_distance(a: &ViewDescriptor, b: &ViewDescriptor) -> Result<f64, RenderError> {
    if a.len() != b.len() {
        return Err(RenderError::LengthMismatch(a.len(), b.len()));
    }
    let sum_sq: f64 = a
        .values
        .iter()
        .zip(&b.values)
        .map(|(x, y)| (x - y) * (x - y))
        .sum();
    Ok((sum_sq / a.len() as f64).sqrt())
}
