//! Command-line front end: `aspects`, `library`, `recognize`, `infer`,
//! `report`.
//!
//! Exit codes: 0 on success, 1 when a run's decision is "reformulate",
//! 2 on usage or input errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use viewbayes::inference::{BetaParams, BinomialObservation, Decision, FusionOperator};
use viewbayes::pipeline::{
    self, cmd_aspects, cmd_infer, cmd_library, cmd_recognize, RunConfig, OUTPUT_DIR_ENV,
};

#[derive(Parser)]
#[command(
    name = "viewbayes",
    version,
    about = "View-based 3D object recognition via sequential Beta-Binomial inference"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a mesh's view ring, export its profile and aspect partition.
    Aspects(AspectsArgs),
    /// Build a labelled view library and save it to a file.
    Library(LibraryArgs),
    /// Run the full recognition experiment and chain the inference.
    Recognize(RecognizeArgs),
    /// Pure inference: chain Beta-Binomial updates over given batches.
    Infer(InferArgs),
    /// Pretty-print a report.json produced by recognize or infer.
    Report(ReportArgs),
}

/// Options shared by commands that read a config file and write outputs.
#[derive(Args)]
struct CommonArgs {
    /// TOML config file; explicit flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (overrides config and VIEWBAYES_OUT).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for all randomness.
    #[arg(long)]
    seed: Option<u64>,
}

impl CommonArgs {
    /// Layering: flag > environment > config file > defaults.
    fn build_config(&self) -> Result<RunConfig, pipeline::PipelineError> {
        let mut config = match &self.config {
            Some(path) => RunConfig::from_toml_file(path)?,
            None => RunConfig::default(),
        };
        if let Ok(dir) = std::env::var(OUTPUT_DIR_ENV) {
            config.output_dir = PathBuf::from(dir);
        }
        if let Some(out) = &self.out {
            config.output_dir = out.clone();
        }
        if let Some(seed) = self.seed {
            config.seed = seed;
        }
        Ok(config)
    }
}

#[derive(Args)]
struct AspectsArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh source: icosphere:N, cube, lbracket, or an OBJ file path.
    #[arg(long)]
    mesh: Option<String>,
    #[arg(long)]
    increment: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
    /// View-similarity radius for likelihood and boundary detection.
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    boundary_quantile: Option<f64>,
    /// Also dump every rendered view as a PGM image.
    #[arg(long)]
    dump_pgm: bool,
}

#[derive(Args)]
struct LibraryArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Mesh sources to include (repeatable).
    #[arg(long, required = true)]
    mesh: Vec<String>,
    /// Library file to write.
    #[arg(long)]
    file: PathBuf,
    #[arg(long)]
    increment: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct RecognizeArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Target mesh source.
    #[arg(long)]
    target: Option<String>,
    /// Distractor mesh sources (repeatable).
    #[arg(long)]
    distractor: Vec<String>,
    /// Replace rendering with a Bernoulli channel of this success rate.
    #[arg(long, conflicts_with = "fixed_k")]
    simulate: Option<f64>,
    /// Force every batch to exactly K successes.
    #[arg(long)]
    fixed_k: Option<u64>,
    #[arg(long)]
    batches: Option<usize>,
    #[arg(long)]
    batch_size: Option<u64>,
    /// Prior Beta parameters: alpha beta.
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"])]
    prior: Option<Vec<f64>>,
    #[arg(long)]
    tau: Option<f64>,
    #[arg(long)]
    jitter: Option<f64>,
    #[arg(long)]
    confirm_threshold: Option<f64>,
    #[arg(long)]
    epsilon_conv: Option<f64>,
    #[arg(long)]
    increment: Option<f64>,
    #[arg(long)]
    resolution: Option<usize>,
    #[arg(long)]
    grid_size: Option<usize>,
}

#[derive(Args)]
struct InferArgs {
    #[command(flatten)]
    common: CommonArgs,
    /// Prior Beta parameters: alpha beta.
    #[arg(long, num_args = 2, value_names = ["ALPHA", "BETA"], required = true)]
    prior: Vec<f64>,
    /// Batches as N:K pairs (repeatable, at least one).
    #[arg(long)]
    batch: Vec<String>,
    /// Fusion operator for exported grid densities:
    /// product, max, min or algebraic_sum.
    #[arg(long, value_parser = parse_operator)]
    op: Option<FusionOperator>,
    /// Grid points for fused densities.
    #[arg(long)]
    grid: Option<usize>,
    #[arg(long)]
    confirm_threshold: Option<f64>,
    #[arg(long)]
    epsilon_conv: Option<f64>,
}

#[derive(Args)]
struct ReportArgs {
    /// report.json to display.
    file: PathBuf,
}

fn parse_operator(text: &str) -> Result<FusionOperator, String> {
    text.parse()
}

fn parse_batch(text: &str) -> Result<BinomialObservation, String> {
    let (n, k) = text
        .split_once(':')
        .ok_or_else(|| format!("batch {text:?} is not of the form N:K"))?;
    let n: u64 = n
        .parse()
        .map_err(|_| format!("bad trial count in {text:?}"))?;
    let k: u64 = k
        .parse()
        .map_err(|_| format!("bad success count in {text:?}"))?;
    BinomialObservation::new(n, k).map_err(|e| e.to_string())
}

fn run(cli: Cli) -> Result<Decision, String> {
    match cli.command {
        Command::Aspects(args) => {
            let mut config = args.common.build_config().map_err(|e| e.to_string())?;
            if let Some(mesh) = args.mesh {
                config.target_mesh = mesh;
            }
            overlay(&mut config.increment_deg, args.increment);
            overlay(&mut config.resolution, args.resolution);
            overlay(&mut config.grid_size, args.grid_size);
            overlay(&mut config.epsilon, args.epsilon);
            overlay(&mut config.boundary_quantile, args.boundary_quantile);

            let output = cmd_aspects(&config, args.dump_pgm).map_err(|e| e.to_string())?;
            println!(
                "{} views -> {} aspect(s); wrote {} and {}",
                (360.0 / config.increment_deg).round(),
                output.aspect_count,
                output.profile_csv.display(),
                output.partition_json.display()
            );
            Ok(Decision::Accepted)
        }
        Command::Library(args) => {
            let mut config = args.common.build_config().map_err(|e| e.to_string())?;
            let mut meshes = args.mesh.into_iter();
            config.target_mesh = meshes.next().expect("clap enforces at least one mesh");
            config.distractor_meshes = meshes.collect();
            overlay(&mut config.increment_deg, args.increment);
            overlay(&mut config.resolution, args.resolution);
            overlay(&mut config.grid_size, args.grid_size);

            let entries = cmd_library(&config, &args.file).map_err(|e| e.to_string())?;
            println!("wrote {} entries to {}", entries, args.file.display());
            Ok(Decision::Accepted)
        }
        Command::Recognize(args) => {
            let mut config = args.common.build_config().map_err(|e| e.to_string())?;
            if let Some(target) = args.target {
                config.target_mesh = target;
            }
            if !args.distractor.is_empty() {
                config.distractor_meshes = args.distractor;
            }
            if args.simulate.is_some() {
                config.simulate_p = args.simulate;
            }
            if args.fixed_k.is_some() {
                config.fixed_k = args.fixed_k;
            }
            overlay(&mut config.batch_count, args.batches);
            overlay(&mut config.batch_size, args.batch_size);
            overlay(&mut config.tau, args.tau);
            overlay(&mut config.jitter_deg, args.jitter);
            overlay(&mut config.confirm_threshold, args.confirm_threshold);
            overlay(&mut config.epsilon_conv, args.epsilon_conv);
            overlay(&mut config.increment_deg, args.increment);
            overlay(&mut config.resolution, args.resolution);
            overlay(&mut config.grid_size, args.grid_size);
            if let Some(prior) = args.prior {
                config.prior_alpha = prior[0];
                config.prior_beta = prior[1];
            }

            let output = cmd_recognize(&config).map_err(|e| e.to_string())?;
            let last = output.report.frames.last().expect("at least one frame");
            println!(
                "final posterior Beta({}, {}), mean {:.4}; {} of {} frames confirmed",
                last.posterior.alpha(),
                last.posterior.beta(),
                last.mean,
                output.report.frames.iter().filter(|f| f.confirmed).count(),
                output.report.frames.len()
            );
            println!(
                "decision: {}; report at {}",
                decision_name(output.report.decision),
                output.report_json.display()
            );
            Ok(output.report.decision)
        }
        Command::Infer(args) => {
            let mut config = args.common.build_config().map_err(|e| e.to_string())?;
            overlay(&mut config.fusion_operator, args.op);
            overlay(&mut config.grid_points, args.grid);
            overlay(&mut config.confirm_threshold, args.confirm_threshold);
            overlay(&mut config.epsilon_conv, args.epsilon_conv);

            let prior = BetaParams::new(args.prior[0], args.prior[1]).map_err(|e| e.to_string())?;
            if args.batch.is_empty() {
                return Err("at least one --batch N:K is required".into());
            }
            let batches: Vec<BinomialObservation> = args
                .batch
                .iter()
                .map(|text| parse_batch(text))
                .collect::<Result<_, _>>()?;

            let output = cmd_infer(&prior, &batches, &config).map_err(|e| e.to_string())?;
            let last = output.report.frames.last().expect("at least one frame");
            println!(
                "posterior {} {}",
                last.posterior.alpha(),
                last.posterior.beta()
            );
            println!(
                "decision: {}; report at {}",
                decision_name(output.report.decision),
                output.report_json.display()
            );
            Ok(output.report.decision)
        }
        Command::Report(args) => {
            let text = std::fs::read_to_string(&args.file)
                .map_err(|e| format!("cannot read {}: {e}", args.file.display()))?;
            let formatted = pipeline::format_report(&text).map_err(|e| e.to_string())?;
            print!("{formatted}");
            Ok(Decision::Accepted)
        }
    }
}

fn overlay<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn decision_name(decision: Decision) -> &'static str {
    match decision {
        Decision::Accepted => "accepted",
        Decision::Reformulate => "reformulate",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(Decision::Accepted) => ExitCode::SUCCESS,
        Ok(Decision::Reformulate) => ExitCode::from(1),
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
