//! End-to-end orchestration: configuration, the `aspects` / `recognize` /
//! `infer` commands, and CSV/JSON report emission.
//!
//! Every command is a pure function of its [`RunConfig`] plus the seed:
//! output files are byte-stable across runs on one platform. The
//! effective config is embedded in the report JSON and also written next
//! to it as `config.toml`, so any run can be reproduced from its own
//! output directory.

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{self, normalize_to_unit_sphere, ring_viewpoints, GeometryError, Mesh};
use crate::inference::{
    fuse_on_grid, sequential_run, write_frame_csv, BetaParams, BinomialObservation, Decision,
    FusionOperator, FusionPrior, InferenceError, RecognitionReport,
};
use crate::recognize::{
    build_library, run_trial_batch, simulate_trial_batch, RecognizeError, TrialBatch,
};
use crate::render::{render_silhouette, RenderError};
use crate::viewanalysis::{build_profile, partition_aspects, write_profile_csv, AnalysisError};

/// Environment variable that overrides the configured output directory.
pub const OUTPUT_DIR_ENV: &str = "VIEWBAYES_OUT";

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Render(#[from] RenderError),
    #[error(transparent)]
    Analysis(#[from] AnalysisError),
    #[error(transparent)]
    Recognize(#[from] RecognizeError),
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("mesh file {0:?} not found")]
    MeshNotFound(PathBuf),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("failed reading config {path:?}: {msg}")]
    ConfigFile { path: PathBuf, msg: String },
    #[error("io error on {path:?}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

fn io_err(path: impl Into<PathBuf>) -> impl FnOnce(std::io::Error) -> PipelineError {
    let path = path.into();
    move |source| PipelineError::Io { path, source }
}

/// Full experiment configuration. Defaults mirror the reference
/// experiment: 5 batches of 100 trials against a Beta(4, 4) prior on a
/// 5-degree ring at 256 pixels.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct RunConfig {
    /// Target mesh: a procedural name (`icosphere:3`, `cube`, `lbracket`)
    /// or an OBJ file path.
    pub target_mesh: String,
    /// Additional library meshes the recognizer must tell apart.
    pub distractor_meshes: Vec<String>,
    pub increment_deg: f64,
    pub resolution: usize,
    pub grid_size: usize,
    /// Nearest-descriptor rejection radius.
    pub tau: f64,
    /// Probe viewpoint jitter, degrees.
    pub jitter_deg: f64,
    /// View-similarity radius for likelihood and aspect boundaries.
    pub epsilon: f64,
    pub boundary_quantile: f64,
    pub batch_count: usize,
    pub batch_size: u64,
    pub prior_alpha: f64,
    pub prior_beta: f64,
    pub confirm_threshold: f64,
    pub epsilon_conv: f64,
    pub fusion_operator: FusionOperator,
    pub grid_points: usize,
    pub seed: u64,
    pub output_dir: PathBuf,
    /// Replace rendered trials with a Bernoulli channel of this success
    /// probability.
    pub simulate_p: Option<f64>,
    /// Force every batch to exactly this many successes (reproduces frame
    /// arithmetic independent of the recognizer).
    pub fixed_k: Option<u64>,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            target_mesh: "icosphere:3".into(),
            distractor_meshes: vec!["cube".into()],
            increment_deg: 5.0,
            resolution: 256,
            grid_size: 8,
            tau: 0.2,
            jitter_deg: 2.5,
            epsilon: 0.05,
            boundary_quantile: 0.9,
            batch_count: 5,
            batch_size: 100,
            prior_alpha: 4.0,
            prior_beta: 4.0,
            confirm_threshold: 0.5,
            epsilon_conv: 0.02,
            fusion_operator: FusionOperator::Product,
            grid_points: 2001,
            seed: 42,
            output_dir: PathBuf::from("out"),
            simulate_p: None,
            fixed_k: None,
        }
    }
}

impl RunConfig {
    /// Loads a TOML config file.
    pub fn from_toml_file(path: &Path) -> Result<Self, PipelineError> {
        let text = fs::read_to_string(path).map_err(|e| PipelineError::ConfigFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })?;
        toml::from_str(&text).map_err(|e| PipelineError::ConfigFile {
            path: path.to_path_buf(),
            msg: e.to_string(),
        })
    }

    fn validate(&self) -> Result<(), PipelineError> {
        if self.batch_count == 0 {
            return Err(PipelineError::Config(
                "batch_count must be at least 1".into(),
            ));
        }
        if self.batch_size == 0 {
            return Err(PipelineError::Config(
                "batch_size must be at least 1".into(),
            ));
        }
        if let Some(k) = self.fixed_k {
            if k > self.batch_size {
                return Err(PipelineError::Config(format!(
                    "fixed_k {k} exceeds batch_size {}",
                    self.batch_size
                )));
            }
        }
        if self.simulate_p.is_some() && self.fixed_k.is_some() {
            return Err(PipelineError::Config(
                "simulate_p and fixed_k are mutually exclusive".into(),
            ));
        }
        Ok(())
    }

    fn prior(&self) -> Result<BetaParams, PipelineError> {
        Ok(BetaParams::new(self.prior_alpha, self.prior_beta)?)
    }
}

/// Resolves a mesh source: procedural generator names first, then OBJ
/// files. File meshes are normalized into the unit sphere on load.
pub fn resolve_mesh(source: &str) -> Result<Mesh, PipelineError> {
    match geometry::mesh_from_name(source) {
        Ok(mesh) => Ok(mesh),
        Err(GeometryError::UnknownProcedural(_)) => {
            let path = Path::new(source);
            if !path.exists() {
                return Err(PipelineError::MeshNotFound(path.to_path_buf()));
            }
            let file = fs::File::open(path).map_err(io_err(path))?;
            let name = path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_else(|| source.to_string());
            let mesh = geometry::load_mesh(file, name)?;
            Ok(normalize_to_unit_sphere(&mesh)?)
        }
        Err(other) => Err(other.into()),
    }
}

/// Seed for batch `index` of a run with master seed `master`: a
/// golden-ratio Weyl stride keeps the per-batch streams distinct without
/// any shared-state RNG.
pub fn batch_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

/// Summary of an `aspects` run and the files it wrote.
#[derive(Debug)]
pub struct AspectsOutput {
    pub profile_csv: PathBuf,
    pub partition_json: PathBuf,
    pub aspect_count: usize,
}

/// Serialized form of an aspect partition.
#[derive(Debug, Serialize, Deserialize)]
struct PartitionFile {
    mesh: String,
    increment_deg: f64,
    resolution: usize,
    grid_size: usize,
    epsilon: f64,
    boundary_quantile: f64,
    boundaries: Vec<usize>,
    aspects: Vec<AspectRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
struct AspectRecord {
    start: usize,
    len: usize,
    prototype: usize,
}

/// Renders the target mesh's ring profile, partitions it into aspects and
/// writes `profile.csv` + `partition.json`. With `dump_pgm`, also writes
/// each rendered view as `view_NNN.pgm`.
pub fn cmd_aspects(config: &RunConfig, dump_pgm: bool) -> Result<AspectsOutput, PipelineError> {
    config.validate()?;
    let mesh = resolve_mesh(&config.target_mesh)?;
    let ring = ring_viewpoints(config.increment_deg)?;
    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let profile = build_profile(
        &mesh,
        &ring,
        config.resolution,
        config.grid_size,
        config.epsilon,
    )?;
    let partition = partition_aspects(&profile, config.boundary_quantile)?;

    if dump_pgm {
        for (i, viewpoint) in ring.viewpoints().iter().enumerate() {
            let image = render_silhouette(&mesh, viewpoint, config.resolution)?;
            let path = out_dir.join(format!("view_{i:03}.pgm"));
            let file = fs::File::create(&path).map_err(io_err(&path))?;
            image.write_pgm(file)?;
        }
    }

    let profile_csv = out_dir.join("profile.csv");
    let mut csv = Vec::new();
    write_profile_csv(&profile, &partition, &mut csv).map_err(io_err(&profile_csv))?;
    fs::write(&profile_csv, csv).map_err(io_err(&profile_csv))?;

    let record = PartitionFile {
        mesh: mesh.name().to_string(),
        increment_deg: config.increment_deg,
        resolution: config.resolution,
        grid_size: config.grid_size,
        epsilon: config.epsilon,
        boundary_quantile: config.boundary_quantile,
        boundaries: partition.boundaries.clone(),
        aspects: partition
            .aspects
            .iter()
            .zip(&partition.prototypes)
            .map(|(a, p)| AspectRecord {
                start: a.start,
                len: a.len,
                prototype: *p,
            })
            .collect(),
    };
    let partition_json = out_dir.join("partition.json");
    write_json(&partition_json, &record)?;

    Ok(AspectsOutput {
        profile_csv,
        partition_json,
        aspect_count: partition.aspects.len(),
    })
}

/// Builds the ring library for the given meshes and writes it as a
/// versioned text file.
pub fn cmd_library(config: &RunConfig, out_file: &Path) -> Result<usize, PipelineError> {
    let mut meshes = vec![resolve_mesh(&config.target_mesh)?];
    for source in &config.distractor_meshes {
        meshes.push(resolve_mesh(source)?);
    }
    let library = build_library(
        &meshes,
        config.increment_deg,
        config.resolution,
        config.grid_size,
    )?;
    if let Some(parent) = out_file.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(io_err(parent))?;
        }
    }
    let mut buf = Vec::new();
    crate::recognize::save_library(&library, &mut buf)?;
    fs::write(out_file, buf).map_err(io_err(out_file))?;
    Ok(library.len())
}

/// On-disk report for `recognize`: the effective config plus the chained
/// inference result and per-batch counts.
#[derive(Debug, Serialize, Deserialize)]
pub struct RecognizeReportFile {
    pub config: RunConfig,
    pub batches: Vec<BatchRecord>,
    pub report: RecognitionReport,
}

#[derive(Debug, Serialize, Deserialize)]
pub struct BatchRecord {
    pub n: u64,
    pub k: u64,
    pub seed: Option<u64>,
}

/// Output paths of a `recognize` run.
#[derive(Debug)]
pub struct RecognizeOutput {
    pub report: RecognitionReport,
    pub report_json: PathBuf,
    pub config_toml: PathBuf,
    pub frame_csvs: Vec<PathBuf>,
}

/// Runs the full experiment: batches (rendered, simulated or fixed),
/// chained conjugate updates, and report emission.
pub fn cmd_recognize(config: &RunConfig) -> Result<RecognizeOutput, PipelineError> {
    config.validate()?;
    let prior = config.prior()?;

    let batches: Vec<(BinomialObservation, Option<u64>)> = if let Some(k) = config.fixed_k {
        (0..config.batch_count)
            .map(|_| Ok((BinomialObservation::new(config.batch_size, k)?, None)))
            .collect::<Result<_, PipelineError>>()?
    } else if let Some(p) = config.simulate_p {
        (0..config.batch_count)
            .map(|i| {
                let seed = batch_seed(config.seed, i);
                let batch = simulate_trial_batch(config.batch_size, p, seed)?;
                Ok((BinomialObservation::new(batch.n, batch.k)?, Some(seed)))
            })
            .collect::<Result<_, PipelineError>>()?
    } else {
        let target = resolve_mesh(&config.target_mesh)?;
        let mut meshes = vec![target.clone()];
        for source in &config.distractor_meshes {
            let mesh = resolve_mesh(source)?;
            if mesh.name() == target.name() {
                return Err(PipelineError::Config(format!(
                    "distractor {:?} has the same label as the target",
                    mesh.name()
                )));
            }
            meshes.push(mesh);
        }
        let library = build_library(
            &meshes,
            config.increment_deg,
            config.resolution,
            config.grid_size,
        )?;
        (0..config.batch_count)
            .map(|i| {
                let seed = batch_seed(config.seed, i);
                let batch: TrialBatch = run_trial_batch(
                    &library,
                    target.name(),
                    &target,
                    config.batch_size,
                    config.jitter_deg,
                    config.tau,
                    seed,
                )?;
                Ok((BinomialObservation::new(batch.n, batch.k)?, Some(seed)))
            })
            .collect::<Result<_, PipelineError>>()?
    };

    let observations: Vec<BinomialObservation> = batches.iter().map(|(o, _)| *o).collect();
    let report = sequential_run(
        &prior,
        &observations,
        config.confirm_threshold,
        config.epsilon_conv,
    )?;

    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut frame_csvs = Vec::new();
    for frame in &report.frames {
        let path = out_dir.join(format!("frame_{}.csv", frame.index));
        let mut buf = Vec::new();
        write_frame_csv(frame, &mut buf).map_err(io_err(&path))?;
        fs::write(&path, buf).map_err(io_err(&path))?;
        frame_csvs.push(path);
    }

    let config_toml = out_dir.join("config.toml");
    let toml_text = toml::to_string_pretty(config)
        .map_err(|e| PipelineError::Config(format!("config not serializable: {e}")))?;
    fs::write(&config_toml, toml_text).map_err(io_err(&config_toml))?;

    let record = RecognizeReportFile {
        config: config.clone(),
        batches: batches
            .iter()
            .map(|(o, seed)| BatchRecord {
                n: o.n(),
                k: o.k(),
                seed: *seed,
            })
            .collect(),
        report: report.clone(),
    };
    let report_json = out_dir.join("report.json");
    write_json(&report_json, &record)?;

    Ok(RecognizeOutput {
        report,
        report_json,
        config_toml,
        frame_csvs,
    })
}

/// On-disk report for `infer`: pure inference, no geometry.
#[derive(Debug, Serialize, Deserialize)]
pub struct InferReportFile {
    pub prior: BetaParams,
    pub batches: Vec<BatchRecord>,
    pub confirm_threshold: f64,
    pub epsilon_conv: f64,
    pub fusion_operator: FusionOperator,
    pub grid_points: usize,
    pub report: RecognitionReport,
}

/// Output paths of an `infer` run.
#[derive(Debug)]
pub struct InferOutput {
    pub report: RecognitionReport,
    pub report_json: PathBuf,
    pub fused_csvs: Vec<PathBuf>,
}

/// Chains the given batches through conjugate updates and writes
/// `report.json`. For a non-product fusion operator, each frame's
/// prior-likelihood fusion is also exported as a grid-density CSV
/// (`fused_frame_N.csv`, columns `q, density`).
pub fn cmd_infer(
    prior: &BetaParams,
    observations: &[BinomialObservation],
    config: &RunConfig,
) -> Result<InferOutput, PipelineError> {
    let report = sequential_run(
        prior,
        observations,
        config.confirm_threshold,
        config.epsilon_conv,
    )?;

    let out_dir = &config.output_dir;
    fs::create_dir_all(out_dir).map_err(io_err(out_dir))?;

    let mut fused_csvs = Vec::new();
    if config.fusion_operator != FusionOperator::Product {
        for frame in &report.frames {
            let fused = fuse_on_grid(
                &FusionPrior::Beta(frame.prior),
                &frame.observation,
                config.fusion_operator,
                config.grid_points,
            )?;
            let path = out_dir.join(format!("fused_frame_{}.csv", frame.index));
            let mut buf = String::from("q,density\n");
            for i in 0..fused.grid_points() {
                buf.push_str(&format!("{},{}\n", fused.q_at(i), fused.values()[i]));
            }
            fs::write(&path, buf).map_err(io_err(&path))?;
            fused_csvs.push(path);
        }
    }

    let record = InferReportFile {
        prior: *prior,
        batches: observations
            .iter()
            .map(|o| BatchRecord {
                n: o.n(),
                k: o.k(),
                seed: None,
            })
            .collect(),
        confirm_threshold: config.confirm_threshold,
        epsilon_conv: config.epsilon_conv,
        fusion_operator: config.fusion_operator,
        grid_points: config.grid_points,
        report: report.clone(),
    };
    let report_json = out_dir.join("report.json");
    write_json(&report_json, &record)?;

    Ok(InferOutput {
        report,
        report_json,
        fused_csvs,
    })
}

/// Human-readable rendering of a report file (either command's shape).
pub fn format_report(json_text: &str) -> Result<String, PipelineError> {
    let value: serde_json::Value = serde_json::from_str(json_text)
        .map_err(|e| PipelineError::Config(format!("unreadable report: {e}")))?;
    let report: RecognitionReport = serde_json::from_value(
        value
            .get("report")
            .cloned()
            .ok_or_else(|| PipelineError::Config("report field missing".into()))?,
    )
    .map_err(|e| PipelineError::Config(format!("unreadable report: {e}")))?;

    let mut out = String::new();
    out.push_str("frame  prior             n     k  posterior         mean    95% interval      confirmed\n");
    for f in &report.frames {
        out.push_str(&format!(
            "{:<5}  {:<16} {:>4}  {:>4}  {:<16}  {:.4}  [{:.4}, {:.4}]  {}\n",
            f.index,
            format!("Beta({}, {})", f.prior.alpha(), f.prior.beta()),
            f.observation.n(),
            f.observation.k(),
            format!("Beta({}, {})", f.posterior.alpha(), f.posterior.beta()),
            f.mean,
            f.credible_interval_95.0,
            f.credible_interval_95.1,
            if f.confirmed { "yes" } else { "no" },
        ));
    }
    out.push_str(&format!(
        "confirm fraction: {:.2}  converged at: {}  decision: {}\n",
        report.confirm_fraction,
        report
            .converged_at
            .map(|i| i.to_string())
            .unwrap_or_else(|| "never".into()),
        match report.decision {
            Decision::Accepted => "accepted",
            Decision::Reformulate => "reformulate",
        }
    ));
    Ok(out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), PipelineError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| PipelineError::Config(format!("not serializable: {e}")))?;
    text.push('\n');
    fs::write(path, text).map_err(io_err(path))
}
