//! Labelled view libraries, nearest-descriptor classification and trial
//! batches — the bridge from rendered aspects to per-batch (n, k) counts.
//!
//! A library holds one descriptor per (mesh, ring view). A recognition
//! trial renders a probe view (a ring view nudged by angular jitter, the
//! stand-in for a hand-held camera), classifies it against the library by
//! nearest descriptor, and succeeds when the winning label matches the
//! target. Batches of trials produce the k-of-n observations the
//! inference chain consumes.
//!
//! All randomness flows through explicitly seeded ChaCha8 generators
//! (`ChaCha8Rng::seed_from_u64`), so every batch is bit-reproducible from
//! its seed. Each trial draws two f64 values in a fixed order: the ring
//! view index, then the jitter offset.

use std::io::{BufRead, BufReader, Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::geometry::{ring_viewpoints, GeometryError, Mesh, Viewpoint};
use crate::render::{
    descriptor_distance, extract_descriptor, render_silhouette, RenderError, ViewDescriptor,
};

/// On-disk library format version.
pub const LIBRARY_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum RecognizeError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error("library needs at least one mesh")]
    EmptyMeshList,
    #[error("query descriptor length {query} does not match library fingerprint length {library}")]
    FingerprintMismatch { query: usize, library: usize },
    #[error("batch needs at least one trial")]
    EmptyBatch,
    #[error("success probability {0} outside [0, 1]")]
    InvalidProbability(f64),
    #[error("target label {0:?} not present in library")]
    UnknownLabel(String),
    #[error("label {0:?} contains whitespace, cannot be serialized")]
    UnserializableLabel(String),
    #[error("library file, line {line}: {msg}")]
    Format { line: usize, msg: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Build parameters a library is only valid against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LibraryFingerprint {
    pub resolution: usize,
    pub grid_size: usize,
    pub increment_deg: f64,
}

/// One remembered view of a labelled object.
#[derive(Debug, Clone)]
pub struct LibraryEntry {
    pub label: String,
    pub viewpoint: Viewpoint,
    pub descriptor: ViewDescriptor,
}

/// The remembered views: one entry per (mesh, ring viewpoint), in mesh
/// order then ring order.
#[derive(Debug, Clone)]
pub struct ViewLibrary {
    entries: Vec<LibraryEntry>,
    fingerprint: LibraryFingerprint,
}

impl ViewLibrary {
    pub fn entries(&self) -> &[LibraryEntry] {
        &self.entries
    }

    pub fn fingerprint(&self) -> &LibraryFingerprint {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn contains_label(&self, label: &str) -> bool {
        self.entries.iter().any(|e| e.label == label)
    }
}

/// Renders every ring view of every mesh into a library. Mesh names are
/// the labels.
pub fn build_library(
    meshes: &[Mesh],
    increment_deg: f64,
    resolution: usize,
    grid_size: usize,
) -> Result<ViewLibrary, RecognizeError> {
    if meshes.is_empty() {
        return Err(RecognizeError::EmptyMeshList);
    }
    let ring = ring_viewpoints(increment_deg)?;
    let mut entries = Vec::with_capacity(meshes.len() * ring.len());
    for mesh in meshes {
        for viewpoint in ring.viewpoints() {
            let image = render_silhouette(mesh, viewpoint, resolution)?;
            let descriptor = extract_descriptor(&image, grid_size)?;
            entries.push(LibraryEntry {
                label: mesh.name().to_string(),
                viewpoint: viewpoint.clone(),
                descriptor,
            });
        }
    }
    Ok(ViewLibrary {
        entries,
        fingerprint: LibraryFingerprint {
            resolution,
            grid_size,
            increment_deg,
        },
    })
}

/// Result of classifying one query descriptor.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    /// Nearest entry within tau: its label and distance.
    Match { label: String, distance: f64 },
    /// Nearest entry was farther than tau.
    NoMatch { nearest_distance: f64 },
}

/// Nearest-neighbour classification with rejection radius `tau`.
/// Equal distances resolve to the lowest entry index.
pub fn classify(
    library: &ViewLibrary,
    query: &ViewDescriptor,
    tau: f64,
) -> Result<Classification, RecognizeError> {
    let expected = library.entries[0].descriptor.len();
    if query.len() != expected {
        return Err(RecognizeError::FingerprintMismatch {
            query: query.len(),
            library: expected,
        });
    }
    let mut best_index = 0usize;
    let mut best_distance = f64::INFINITY;
    for (i, entry) in library.entries.iter().enumerate() {
        let d = descriptor_distance(&entry.descriptor, query)?;
        if d < best_distance {
            best_distance = d;
            best_index = i;
        }
    }
    if best_distance <= tau {
        Ok(Classification::Match {
            label: library.entries[best_index].label.clone(),
            distance: best_distance,
        })
    } else {
        Ok(Classification::NoMatch {
            nearest_distance: best_distance,
        })
    }
}

/// Where a batch's outcomes came from.
#[derive(Debug, Clone, PartialEq)]
pub enum TrialSource {
    /// Rendered probe views against a library.
    Rendered,
    /// Seeded Bernoulli channel with the given success probability.
    Simulated { p_success: f64, seed: u64 },
}

/// One batch of recognition trials.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialBatch {
    pub n: u64,
    pub k: u64,
    pub outcomes: Vec<bool>,
    pub source: TrialSource,
}

impl TrialBatch {
    fn from_outcomes(outcomes: Vec<bool>, source: TrialSource) -> Self {
        let n = outcomes.len() as u64;
        let k = outcomes.iter().filter(|&&b| b).count() as u64;
        Self {
            n,
            k,
            outcomes,
            source,
        }
    }
}

/// Runs `n` rendered recognition trials of `mesh` against `library`.
///
/// Each probe viewpoint is a uniformly drawn ring view of the library's
/// increment, nudged by a jitter angle uniform in [-jitter_deg,
/// +jitter_deg]. A trial succeeds when classification returns
/// `target_label`. Same inputs and seed, same batch, bit for bit.
pub fn run_trial_batch(
    library: &ViewLibrary,
    target_label: &str,
    mesh: &Mesh,
    n: u64,
    jitter_deg: f64,
    tau: f64,
    seed: u64,
) -> Result<TrialBatch, RecognizeError> {
    if n == 0 {
        return Err(RecognizeError::EmptyBatch);
    }
    if !library.contains_label(target_label) {
        return Err(RecognizeError::UnknownLabel(target_label.to_string()));
    }
    let fp = library.fingerprint();
    let ring_len = (360.0 / fp.increment_deg).round() as u64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut outcomes = Vec::with_capacity(n as usize);
    for _ in 0..n {
        // draw order is part of the reproducibility contract
        let u: f64 = rng.random();
        let view_index = ((u * ring_len as f64) as u64).min(ring_len - 1);
        let v: f64 = rng.random();
        let jitter = (2.0 * v - 1.0) * jitter_deg;
        let angle = view_index as f64 * fp.increment_deg + jitter;
        let probe = Viewpoint::on_ring(angle);
        let image = render_silhouette(mesh, &probe, fp.resolution)?;
        let descriptor = extract_descriptor(&image, fp.grid_size)?;
        let success = match classify(library, &descriptor, tau)? {
            Classification::Match { label, .. } => label == target_label,
            Classification::NoMatch { .. } => false,
        };
        outcomes.push(success);
    }
    Ok(TrialBatch::from_outcomes(outcomes, TrialSource::Rendered))
}

/// Draws `n` seeded Bernoulli(p_success) trials — the synthetic stand-in
/// for a rendered batch.
pub fn simulate_trial_batch(
    n: u64,
    p_success: f64,
    seed: u64,
) -> Result<TrialBatch, RecognizeError> {
    if n == 0 {
        return Err(RecognizeError::EmptyBatch);
    }
    if !(0.0..=1.0).contains(&p_success) || p_success.is_nan() {
        return Err(RecognizeError::InvalidProbability(p_success));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let outcomes: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < p_success).collect();
    Ok(TrialBatch::from_outcomes(
        outcomes,
        TrialSource::Simulated { p_success, seed },
    ))
}

/// Writes the library as a versioned line-oriented text file:
///
/// ```text
/// viewlib 1
/// fingerprint <resolution> <grid_size> <increment_deg>
/// entry <label> <ring_angle> <v0> <v1> ...
/// ```
///
/// Floats use Rust's shortest-roundtrip formatting, so loading recovers
/// them bit-exactly and the format is locale-independent.
pub fn save_library(library: &ViewLibrary, mut out: impl Write) -> Result<(), RecognizeError> {
    writeln!(out, "viewlib {LIBRARY_FORMAT_VERSION}")?;
    let fp = library.fingerprint();
    writeln!(
        out,
        "fingerprint {} {} {}",
        fp.resolution, fp.grid_size, fp.increment_deg
    )?;
    for entry in library.entries() {
        if entry.label.chars().any(char::is_whitespace) {
            return Err(RecognizeError::UnserializableLabel(entry.label.clone()));
        }
        let angle = entry.viewpoint.ring_angle().unwrap_or(0.0);
        write!(out, "entry {} {}", entry.label, angle)?;
        for v in entry.descriptor.values() {
            write!(out, " {v}")?;
        }
        writeln!(out)?;
    }
    Ok(())
}

/// Reads a library written by [`save_library`].
pub fn load_library(source: impl Read) -> Result<ViewLibrary, RecognizeError> {
    let reader = BufReader::new(source);
    let mut lines = reader.lines().enumerate();

    let (_, header) = lines.next().ok_or_else(|| RecognizeError::Format {
        line: 1,
        msg: "empty file".into(),
    })?;
    let header = header?;
    let version: u32 = header
        .strip_prefix("viewlib ")
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| RecognizeError::Format {
            line: 1,
            msg: format!("expected `viewlib <version>`, got {header:?}"),
        })?;
    if version != LIBRARY_FORMAT_VERSION {
        return Err(RecognizeError::Format {
            line: 1,
            msg: format!("unsupported version {version}"),
        });
    }

    let (_, fp_line) = lines.next().ok_or_else(|| RecognizeError::Format {
        line: 2,
        msg: "missing fingerprint".into(),
    })?;
    let fp_line = fp_line?;
    let fp_tokens: Vec<&str> = fp_line.split_whitespace().collect();
    if fp_tokens.len() != 4 || fp_tokens[0] != "fingerprint" {
        return Err(RecognizeError::Format {
            line: 2,
            msg: format!(
                "expected `fingerprint <resolution> <grid_size> <increment>`, got {fp_line:?}"
            ),
        });
    }
    let parse_err = |line: usize, what: &str| RecognizeError::Format {
        line,
        msg: format!("bad {what}"),
    };
    let fingerprint = LibraryFingerprint {
        resolution: fp_tokens[1]
            .parse()
            .map_err(|_| parse_err(2, "resolution"))?,
        grid_size: fp_tokens[2]
            .parse()
            .map_err(|_| parse_err(2, "grid size"))?,
        increment_deg: fp_tokens[3]
            .parse()
            .map_err(|_| parse_err(2, "increment"))?,
    };

    let mut entries = Vec::new();
    for (idx, line) in lines {
        let lineno = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut tokens = line.split_whitespace();
        if tokens.next() != Some("entry") {
            return Err(RecognizeError::Format {
                line: lineno,
                msg: "expected `entry` record".into(),
            });
        }
        let label = tokens
            .next()
            .ok_or_else(|| parse_err(lineno, "label"))?
            .to_string();
        let angle: f64 = tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| parse_err(lineno, "ring angle"))?;
        let values: Vec<f64> = tokens
            .map(|t| t.parse().map_err(|_| parse_err(lineno, "descriptor value")))
            .collect::<Result<_, _>>()?;
        let descriptor = ViewDescriptor::new(values, fingerprint.grid_size).map_err(|e| {
            RecognizeError::Format {
                line: lineno,
                msg: e.to_string(),
            }
        })?;
        entries.push(LibraryEntry {
            label,
            viewpoint: Viewpoint::on_ring(angle),
            descriptor,
        });
    }
    if entries.is_empty() {
        return Err(RecognizeError::EmptyMeshList);
    }
    Ok(ViewLibrary {
        entries,
        fingerprint,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{cube, icosphere, lbracket};

    fn small_library() -> ViewLibrary {
        build_library(&[icosphere(2).unwrap(), cube().unwrap()], 30.0, 128, 8).unwrap()
    }

    #[test]
    fn library_entry_counts() {
        let lib = build_library(&[icosphere(1).unwrap()], 5.0, 64, 8).unwrap();
        assert_eq!(lib.len(), 72);
        let lib = build_library(&[icosphere(1).unwrap(), cube().unwrap()], 90.0, 64, 8).unwrap();
        assert_eq!(lib.len(), 8);
        assert!(matches!(
            build_library(&[], 90.0, 64, 8),
            Err(RecognizeError::EmptyMeshList)
        ));
    }

    #[test]
    fn classify_own_descriptor_is_exact() {
        let lib = small_library();
        let query = lib.entries()[3].descriptor.clone();
        match classify(&lib, &query, 0.01).unwrap() {
            Classification::Match { label, distance } => {
                assert_eq!(label, lib.entries()[3].label);
                assert_eq!(distance, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_off_grid_probe_finds_right_mesh() {
        let lib = build_library(&[icosphere(2).unwrap(), cube().unwrap()], 5.0, 128, 8).unwrap();
        // +2 degrees off the library grid
        let probe = Viewpoint::on_ring(42.0);
        let mesh = cube().unwrap();
        let image = render_silhouette(&mesh, &probe, 128).unwrap();
        let descriptor = extract_descriptor(&image, 8).unwrap();
        match classify(&lib, &descriptor, 0.2).unwrap() {
            Classification::Match { label, .. } => assert_eq!(label, "cube"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_with_zero_tau_rejects_inexact() {
        let lib = small_library();
        let mesh = cube().unwrap();
        let probe = Viewpoint::on_ring(17.0); // off-grid for 30-degree ring
        let image = render_silhouette(&mesh, &probe, 128).unwrap();
        let descriptor = extract_descriptor(&image, 8).unwrap();
        assert!(matches!(
            classify(&lib, &descriptor, 0.0).unwrap(),
            Classification::NoMatch { .. }
        ));
    }

    #[test]
    fn classify_ties_resolve_to_lowest_entry_index() {
        // two labels with identical descriptors: the earlier entry wins,
        // and permuting the entries flips only that tie-break
        let lib = small_library();
        let mut entries = lib.entries().to_vec();
        let copy = LibraryEntry {
            label: "copycat".into(),
            viewpoint: entries[0].viewpoint.clone(),
            descriptor: entries[0].descriptor.clone(),
        };
        entries.push(copy.clone());
        let padded = ViewLibrary {
            entries: entries.clone(),
            fingerprint: lib.fingerprint,
        };
        let query = copy.descriptor.clone();
        match classify(&padded, &query, 0.1).unwrap() {
            Classification::Match { label, distance } => {
                assert_eq!(label, entries[0].label);
                assert_eq!(distance, 0.0);
            }
            other => panic!("unexpected {other:?}"),
        }

        entries.rotate_right(1); // the copy now precedes the original
        let rotated = ViewLibrary {
            entries,
            fingerprint: lib.fingerprint,
        };
        match classify(&rotated, &query, 0.1).unwrap() {
            Classification::Match { label, .. } => assert_eq!(label, "copycat"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn classify_rejects_fingerprint_mismatch() {
        let lib = small_library();
        let query = ViewDescriptor::new(vec![0.0; 4 * 4 + 4], 4).unwrap();
        assert!(matches!(
            classify(&lib, &query, 0.5),
            Err(RecognizeError::FingerprintMismatch { .. })
        ));
    }

    #[test]
    fn zero_jitter_probes_match_library_views_exactly() {
        let lib = small_library();
        let mesh = icosphere(2).unwrap();
        let batch = run_trial_batch(&lib, "icosphere:2", &mesh, 20, 0.0, 10.0, 7).unwrap();
        assert_eq!(batch.k, batch.n);
        assert_eq!(batch.n, 20);
    }

    #[test]
    fn trial_batches_are_bit_reproducible() {
        let lib = small_library();
        let mesh = cube().unwrap();
        let a = run_trial_batch(&lib, "cube", &mesh, 30, 2.5, 0.2, 42).unwrap();
        let b = run_trial_batch(&lib, "cube", &mesh, 30, 2.5, 0.2, 42).unwrap();
        assert_eq!(a, b);
        let c = run_trial_batch(&lib, "cube", &mesh, 30, 2.5, 0.2, 43).unwrap();
        assert_eq!(c.n, 30); // different seed still runs; k may differ
    }

    #[test]
    fn unknown_target_label_is_rejected() {
        let lib = small_library();
        let mesh = cube().unwrap();
        assert!(matches!(
            run_trial_batch(&lib, "teapot", &mesh, 5, 0.0, 0.2, 1),
            Err(RecognizeError::UnknownLabel(_))
        ));
    }

    #[test]
    fn five_seed_rendered_batches_match_recorded_oracle() {
        // Frozen from a reference run of this configuration. With the
        // default tau the icosphere/cube pair is fully separable, so every
        // jittered probe still classifies correctly; the tight-tau bracket
        // run exercises the rejection path and sits near the 85% regime.
        let lib = build_library(&[icosphere(3).unwrap(), cube().unwrap()], 5.0, 256, 8).unwrap();
        let mesh = icosphere(3).unwrap();
        let ks: Vec<u64> = (1..=5u64)
            .map(|seed| {
                run_trial_batch(&lib, "icosphere:3", &mesh, 100, 2.5, 0.2, seed)
                    .unwrap()
                    .k
            })
            .collect();
        assert_eq!(ks, vec![100, 100, 100, 100, 100]);

        let lib = build_library(&[lbracket().unwrap(), cube().unwrap()], 5.0, 256, 8).unwrap();
        let mesh = lbracket().unwrap();
        let ks: Vec<u64> = (1..=5u64)
            .map(|seed| {
                run_trial_batch(&lib, "lbracket", &mesh, 100, 2.5, 0.008, seed)
                    .unwrap()
                    .k
            })
            .collect();
        assert_eq!(ks, vec![85, 87, 84, 83, 88]);
        // sampling-noise bound: each k/n within 0.15 of the 5-seed mean
        let mean = ks.iter().sum::<u64>() as f64 / 5.0 / 100.0;
        for k in &ks {
            assert!((*k as f64 / 100.0 - mean).abs() <= 0.15);
        }
    }

    #[test]
    fn simulate_extremes() {
        let all = simulate_trial_batch(50, 1.0, 3).unwrap();
        assert_eq!(all.k, 50);
        let none = simulate_trial_batch(50, 0.0, 3).unwrap();
        assert_eq!(none.k, 0);
        assert!(matches!(
            simulate_trial_batch(10, 1.5, 3),
            Err(RecognizeError::InvalidProbability(_))
        ));
        assert!(matches!(
            simulate_trial_batch(0, 0.5, 3),
            Err(RecognizeError::EmptyBatch)
        ));
    }

    #[test]
    fn simulate_is_reproducible_and_counts_outcomes() {
        let a = simulate_trial_batch(100, 0.75, 42).unwrap();
        let b = simulate_trial_batch(100, 0.75, 42).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.k, a.outcomes.iter().filter(|&&o| o).count() as u64);
        assert_eq!(
            a.source,
            TrialSource::Simulated {
                p_success: 0.75,
                seed: 42
            }
        );
    }

    #[test]
    fn simulate_five_hundred_trials_regression() {
        // binomial(500, 0.75): sigma = sqrt(500 * 0.75 * 0.25) = 9.68, so
        // [340, 410] is the 4-sigma band around 375; the exact k is frozen
        let batch = simulate_trial_batch(500, 0.75, 42).unwrap();
        assert!((340..=410).contains(&batch.k), "k = {}", batch.k);
        assert_eq!(batch.k, 391);
    }

    #[test]
    fn simulated_success_rate_concentrates() {
        // 200 seeds at n=100, p=0.75: the mean success rate settles near p
        let mut total = 0.0;
        for seed in 0..200u64 {
            let batch = simulate_trial_batch(100, 0.75, seed).unwrap();
            total += batch.k as f64 / batch.n as f64;
        }
        let mean = total / 200.0;
        assert!((0.73..=0.77).contains(&mean), "mean {mean}");
    }

    #[test]
    fn library_round_trips_through_text() {
        let lib = small_library();
        let mut buf = Vec::new();
        save_library(&lib, &mut buf).unwrap();
        let loaded = load_library(&buf[..]).unwrap();
        assert_eq!(loaded.len(), lib.len());
        assert_eq!(loaded.fingerprint(), lib.fingerprint());
        for (a, b) in lib.entries().iter().zip(loaded.entries()) {
            assert_eq!(a.label, b.label);
            assert_eq!(a.descriptor.values(), b.descriptor.values()); // bit-exact
            assert_eq!(a.viewpoint.ring_angle(), b.viewpoint.ring_angle());
        }
    }

    #[test]
    fn load_rejects_malformed_files() {
        assert!(matches!(
            load_library("not a library\n".as_bytes()),
            Err(RecognizeError::Format { line: 1, .. })
        ));
        assert!(matches!(
            load_library("viewlib 99\nfingerprint 64 8 30\n".as_bytes()),
            Err(RecognizeError::Format { line: 1, .. })
        ));
        assert!(matches!(
            load_library("viewlib 1\nbogus\n".as_bytes()),
            Err(RecognizeError::Format { line: 2, .. })
        ));
        let bad_entry = "viewlib 1\nfingerprint 64 8 30\nentry cube zebra 0.5\n";
        assert!(matches!(
            load_library(bad_entry.as_bytes()),
            Err(RecognizeError::Format { line: 3, .. })
        ));
    }

    #[test]
    fn lbracket_asymmetry_separates_from_cube() {
        // sanity: the library actually distinguishes the shapes
        let lib = build_library(&[lbracket().unwrap(), cube().unwrap()], 30.0, 128, 8).unwrap();
        let mesh = lbracket().unwrap();
        let batch = run_trial_batch(&lib, "lbracket", &mesh, 24, 2.0, 0.5, 11).unwrap();
        assert!(batch.k >= 20, "k = {}", batch.k);
    }
}
