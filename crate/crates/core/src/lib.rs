//! View-based 3D object recognition driven by sequential Beta-Binomial inference.
//!
//! The library renders binary silhouettes ("aspects") of a triangle mesh from
//! viewpoints sampled on the unit view sphere, reduces each aspect to a small
//! numeric descriptor, and scores recognition trials against a labelled view
//! library. Per-batch success counts (k of n) then drive a chain of conjugate
//! Beta-Binomial posterior updates, each posterior becoming the next prior,
//! until the belief stabilises and a decision rule fires.
//!
//! Module map:
//! - [`geometry`] — mesh ingestion, unit-sphere normalization, viewpoint sets
//! - [`render`] — orthographic silhouette rasterization and view descriptors
//! - [`viewanalysis`] — view stability, view likelihood, aspect partitioning
//! - [`recognize`] — view libraries, nearest-descriptor classification, trial batches
//! - [`inference`] — binomial likelihood, Beta priors, conjugate and grid updating
//! - [`pipeline`] — configuration, orchestration, CSV/JSON report emission

pub mod geometry;
pub mod inference;
pub mod pipeline;
pub mod recognize;
pub mod render;
pub mod viewanalysis;
