//! View stability, view likelihood and aspect structure on a view ring.
//!
//! For each ring view the profile records how similar it is to its
//! neighbours (stability) and how much of the ring is within a similarity
//! radius epsilon of it (likelihood — the probability mass, under a
//! uniform prior over ring orientations, of observing an
//! epsilon-equivalent view).
//!
//! Aspect boundaries sit where the image changes sharply between adjacent
//! views: a boundary follows view i when the successive distance at i is
//! a cyclic local maximum, exceeds the configured quantile of all
//! successive distances, and exceeds epsilon. The epsilon floor keeps
//! near-constant profiles (a sphere's ring, where every local maximum is
//! tessellation noise) boundary-free: views closer than epsilon are the
//! same view by definition, so no boundary can separate them. Runs of
//! exactly equal values are treated as one candidate (symmetric meshes
//! produce exact ties) with the boundary at the run's middle.

use thiserror::Error;

use crate::geometry::{Mesh, ViewRing};
use crate::render::{
    descriptor_distance, extract_descriptor, render_silhouette, RenderError, ViewDescriptor,
};

#[derive(Debug, Error)]
pub enum AnalysisError {
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("epsilon must be positive, got {0}")]
    InvalidEpsilon(f64),
    #[error("boundary quantile {0} outside (0, 1)")]
    InvalidQuantile(f64),
    #[error("profile field lengths disagree with ring length {0}")]
    LengthMismatch(usize),
    #[error("ring is empty")]
    EmptyRing,
}

/// Per-view descriptors and statistics over one ring.
#[derive(Debug, Clone)]
pub struct ViewProfile {
    ring: ViewRing,
    descriptors: Vec<ViewDescriptor>,
    successive_distance: Vec<f64>,
    stability: Vec<f64>,
    likelihood: Vec<f64>,
    epsilon: f64,
}

impl ViewProfile {
    /// Assembles a profile from raw parts, checking lengths. Intended for
    /// synthetic profiles in analysis and tests; [`build_profile`] is the
    /// rendering path.
    pub fn from_parts(
        ring: ViewRing,
        descriptors: Vec<ViewDescriptor>,
        successive_distance: Vec<f64>,
        stability: Vec<f64>,
        likelihood: Vec<f64>,
        epsilon: f64,
    ) -> Result<Self, AnalysisError> {
        let n = ring.len();
        if n == 0 {
            return Err(AnalysisError::EmptyRing);
        }
        if descriptors.len() != n
            || successive_distance.len() != n
            || stability.len() != n
            || likelihood.len() != n
        {
            return Err(AnalysisError::LengthMismatch(n));
        }
        if epsilon <= 0.0 || epsilon.is_nan() {
            return Err(AnalysisError::InvalidEpsilon(epsilon));
        }
        Ok(Self {
            ring,
            descriptors,
            successive_distance,
            stability,
            likelihood,
            epsilon,
        })
    }

    pub fn ring(&self) -> &ViewRing {
        &self.ring
    }

    pub fn descriptors(&self) -> &[ViewDescriptor] {
        &self.descriptors
    }

    /// Distance from each view's descriptor to the next view's (cyclic).
    pub fn successive_distance(&self) -> &[f64] {
        &self.successive_distance
    }

    /// 1 / (1 + mean descriptor distance to the two cyclic neighbours);
    /// 1 exactly iff both neighbours are at distance zero.
    pub fn stability(&self) -> &[f64] {
        &self.stability
    }

    /// Fraction of ring views within epsilon of each view.
    pub fn likelihood(&self) -> &[f64] {
        &self.likelihood
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn len(&self) -> usize {
        self.ring.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ring.is_empty()
    }
}

/// Renders every ring view and computes the full profile.
pub fn build_profile(
    mesh: &Mesh,
    ring: &ViewRing,
    resolution: usize,
    grid_size: usize,
    epsilon: f64,
) -> Result<ViewProfile, AnalysisError> {
    if epsilon <= 0.0 || epsilon.is_nan() {
        return Err(AnalysisError::InvalidEpsilon(epsilon));
    }
    if ring.is_empty() {
        return Err(AnalysisError::EmptyRing);
    }
    let descriptors: Vec<ViewDescriptor> = ring
        .viewpoints()
        .iter()
        .map(|vp| {
            let image = render_silhouette(mesh, vp, resolution)?;
            extract_descriptor(&image, grid_size)
        })
        .collect::<Result<_, _>>()?;

    let n = descriptors.len();
    let mut successive = Vec::with_capacity(n);
    for i in 0..n {
        successive.push(descriptor_distance(
            &descriptors[i],
            &descriptors[(i + 1) % n],
        )?);
    }
    let stability: Vec<f64> = (0..n)
        .map(|i| {
            let to_prev = successive[(i + n - 1) % n];
            let to_next = successive[i];
            1.0 / (1.0 + 0.5 * (to_prev + to_next))
        })
        .collect();
    let mut likelihood = Vec::with_capacity(n);
    for i in 0..n {
        let mut close = 0usize;
        for j in 0..n {
            if descriptor_distance(&descriptors[i], &descriptors[j])? <= epsilon {
                close += 1;
            }
        }
        likelihood.push(close as f64 / n as f64);
    }

    ViewProfile::from_parts(
        ring.clone(),
        descriptors,
        successive,
        stability,
        likelihood,
        epsilon,
    )
}

/// A partition of the ring into aspects.
///
/// `boundaries[j]` means a boundary between view `boundaries[j]` and the
/// next view. Aspects are stored in boundary order: aspect `j` starts at
/// `boundaries[j] + 1` (mod ring length) and runs to the next boundary.
/// With no boundaries there is a single aspect covering the whole ring.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AspectPartition {
    pub boundaries: Vec<usize>,
    pub aspects: Vec<AspectRange>,
    /// One prototype view index per aspect: the most stable view inside it.
    pub prototypes: Vec<usize>,
}

/// A cyclic run of `len` consecutive ring views starting at `start`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AspectRange {
    pub start: usize,
    pub len: usize,
}

impl AspectRange {
    pub fn contains(&self, index: usize, ring_len: usize) -> bool {
        let offset = (index + ring_len - self.start) % ring_len;
        offset < self.len
    }

    pub fn views(&self, ring_len: usize) -> impl Iterator<Item = usize> + '_ {
        let start = self.start;
        (0..self.len).map(move |o| (start + o) % ring_len)
    }
}

/// Splits the ring at sharp view changes and picks a prototype per aspect.
pub fn partition_aspects(
    profile: &ViewProfile,
    boundary_quantile: f64,
) -> Result<AspectPartition, AnalysisError> {
    if !(0.0..1.0).contains(&boundary_quantile) || boundary_quantile == 0.0 {
        return Err(AnalysisError::InvalidQuantile(boundary_quantile));
    }
    let sd = profile.successive_distance();
    let n = sd.len();
    let threshold = quantile_interpolated(sd, boundary_quantile);

    let mut boundaries: Vec<usize> = local_max_runs(sd)
        .into_iter()
        .filter(|run| run.value > threshold && run.value > profile.epsilon())
        .map(|run| run.middle(n))
        .collect();
    boundaries.sort_unstable();

    let aspects: Vec<AspectRange> = if boundaries.is_empty() {
        vec![AspectRange { start: 0, len: n }]
    } else {
        (0..boundaries.len())
            .map(|j| {
                let start = (boundaries[j] + 1) % n;
                let end = boundaries[(j + 1) % boundaries.len()];
                let len = (end + n - boundaries[j]) % n;
                let len = if len == 0 { n } else { len };
                AspectRange { start, len }
            })
            .collect()
    };

    let stability = profile.stability();
    let prototypes = aspects
        .iter()
        .map(|aspect| {
            let mut best = aspect.start;
            for view in aspect.views(n) {
                // strictly-better or lower-index-on-tie keeps this deterministic
                if stability[view] > stability[best]
                    || (stability[view] == stability[best] && view < best)
                {
                    best = view;
                }
            }
            best
        })
        .collect();

    Ok(AspectPartition {
        boundaries,
        aspects,
        prototypes,
    })
}

/// Linear-interpolated empirical quantile (the rank `q * (N - 1)`
/// convention).
fn quantile_interpolated(values: &[f64], q: f64) -> f64 {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("distances are finite"));
    let rank = q * (sorted.len() - 1) as f64;
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        sorted[lo]
    } else {
        let frac = rank - lo as f64;
        sorted[lo] + frac * (sorted[hi] - sorted[lo])
    }
}

struct MaxRun {
    start: usize,
    len: usize,
    value: f64,
}

impl MaxRun {
    /// Middle index of the run (lower middle for even lengths).
    fn middle(&self, n: usize) -> usize {
        (self.start + (self.len - 1) / 2) % n
    }
}

/// Cyclic runs of equal values that are strictly greater than the values
/// immediately before and after the run. An all-equal profile has none.
fn local_max_runs(values: &[f64]) -> Vec<MaxRun> {
    let n = values.len();
    let anchor = match (1..n).find(|&i| values[i] != values[i - 1]) {
        Some(i) => i,
        None => return Vec::new(), // constant profile
    };

    let mut runs = Vec::new();
    let mut run_start = anchor;
    let mut idx = 0;
    while idx < n {
        let here = (anchor + idx) % n;
        let next = (anchor + idx + 1) % n;
        if values[next] != values[here] {
            let before = (run_start + n - 1) % n;
            if values[here] > values[before] && values[here] > values[next] {
                let len = (here + n - run_start) % n + 1;
                runs.push(MaxRun {
                    start: run_start,
                    len,
                    value: values[here],
                });
            }
            run_start = next;
        }
        idx += 1;
    }
    runs
}

/// Writes the profile and its partition as CSV with columns
/// `ring_angle, successive_distance, stability, likelihood, aspect_id,
/// is_prototype, is_boundary` (one row per view; `is_boundary` marks the
/// view a boundary follows).
pub fn write_profile_csv(
    profile: &ViewProfile,
    partition: &AspectPartition,
    mut out: impl std::io::Write,
) -> std::io::Result<()> {
    let n = profile.len();
    let mut aspect_of = vec![0usize; n];
    for (id, aspect) in partition.aspects.iter().enumerate() {
        for view in aspect.views(n) {
            aspect_of[view] = id;
        }
    }
    writeln!(
        out,
        "ring_angle,successive_distance,stability,likelihood,aspect_id,is_prototype,is_boundary"
    )?;
    for (i, viewpoint) in profile.ring().viewpoints().iter().enumerate() {
        let angle = viewpoint.ring_angle().unwrap_or(i as f64);
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            angle,
            profile.successive_distance()[i],
            profile.stability()[i],
            profile.likelihood()[i],
            aspect_of[i],
            partition.prototypes.contains(&i) as u8,
            partition.boundaries.contains(&i) as u8,
        )?;
    }
    Ok(())
}
