use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand};

use zoosynth::dataset::{build_split, Manifest, SplitSpec, SplitTag};
use zoosynth::metrics::{DEFAULT_PCK_ALPHA, DISPLAY_MULTIPLIER};
use zoosynth::model::container::load_asset;
use zoosynth::pipeline::{self, Config, DemoOptions, Generator};
use zoosynth::shape::prior::DEFAULT_RELATIVE_SHRINKAGE;
use zoosynth::shape::write_priors;

const EXIT_RUN_FAILURE: u8 = 1;
const EXIT_CONFIG: u8 = 2;

#[derive(Parser)]
#[command(name = "zoosynth", version, about = "Synthetic quadruped pose/shape data generation and evaluation")]
struct Cli {
    /// Log level filter (error, warn, info, debug, trace).
    #[arg(long, global = true, default_value = "info")]
    log_level: String,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate samples into a dataset directory.
    Generate(GenerateArgs),
    /// Split one or more manifests into train and test manifests.
    Split(SplitArgs),
    /// Score predictions against a manifest.
    Eval(EvalArgs),
    /// Render a four-panel preview of one sample.
    Preview(PreviewArgs),
    /// Fit per-taxon shape priors from a directory of embedding banks.
    FitShapes(FitArgs),
    /// Write a self-contained demo asset set and config.
    DemoAssets(DemoArgs),
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(short = 'n', long, default_value_t = 10)]
    count: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Restrict sampling to the train or test partition.
    #[arg(long)]
    split: Option<SplitTag>,
    #[arg(long)]
    no_depth: bool,
    #[arg(long)]
    no_canny: bool,
    #[arg(long)]
    no_caption: bool,
    #[arg(long)]
    no_llm: bool,
    #[arg(long)]
    workers: Option<usize>,
    #[arg(long)]
    image_size: Option<u32>,
    #[arg(long)]
    failure_threshold: Option<f64>,
}

#[derive(Args)]
struct SplitArgs {
    #[arg(long = "manifest", required = true)]
    manifests: Vec<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Defaults to Felidae.
    #[arg(long = "holdout-family")]
    holdout_families: Vec<String>,
    #[arg(long, default_value_t = 0)]
    test_size: usize,
    /// Also enforce the config's explicit pose/camera/scenery partition.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    #[arg(long, conflicts_with = "config")]
    body_model: Option<PathBuf>,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Per-sample CSV output path.
    #[arg(long)]
    csv: Option<PathBuf>,
    #[arg(long, default_value_t = DEFAULT_PCK_ALPHA)]
    alpha: f64,
    #[arg(long, default_value_t = DISPLAY_MULTIPLIER)]
    display_multiplier: f64,
}

#[derive(Args)]
struct PreviewArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    sample: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FitArgs {
    #[arg(long)]
    banks: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_RELATIVE_SHRINKAGE)]
    shrinkage: f64,
}

#[derive(Args)]
struct DemoArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DemoOptions::default().n_poses)]
    poses: usize,
    #[arg(long, default_value_t = DemoOptions::default().embedding_dim)]
    dim: usize,
    #[arg(long, default_value_t = DemoOptions::default().seed)]
    seed: u64,
    /// Skip writing the per-taxon bank files.
    #[arg(long)]
    no_banks: bool,
}

enum Outcome {
    Ok,
    RunFailed,
}

fn load_config(path: &Path) -> anyhow::Result<Config> {
    Ok(Config::load(path)?)
}

fn generate(args: GenerateArgs) -> anyhow::Result<Outcome> {
    let mut cfg = load_config(&args.config)?;
    let a = &mut cfg.ablations;
    a.no_depth |= args.no_depth;
    a.no_canny |= args.no_canny;
    a.no_caption |= args.no_caption;
    a.no_llm |= args.no_llm;
    if let Some(w) = args.workers {
        cfg.generation.workers = w;
    }
    if let Some(s) = args.image_size {
        cfg.camera.image_size = s;
    }
    if let Some(t) = args.failure_threshold {
        cfg.generation.failure_threshold = t;
    }
    cfg.validate()?;
    let generator = Generator::from_config(cfg)?;
    let report = generator.generate(&args.out, args.count, args.seed, args.split)?;
    println!(
        "wrote {} samples to {} ({} failed)",
        report.manifest.records.len(),
        report.manifest_path.display(),
        report.failures.len()
    );
    Ok(if report.run_failed() { Outcome::RunFailed } else { Outcome::Ok })
}

fn split(args: SplitArgs) -> anyhow::Result<Outcome> {
    let mut merged: Option<Manifest> = None;
    for path in &args.manifests {
        let m = Manifest::load(path).with_context(|| format!("reading {}", path.display()))?;
        match &mut merged {
            None => merged = Some(m),
            Some(acc) => acc.records.extend(m.records),
        }
    }
    let manifest = merged.expect("at least one manifest");
    let mut spec = SplitSpec {
        holdout_families: if args.holdout_families.is_empty() {
            zoosynth::taxonomy::DEFAULT_HOLDOUT_FAMILIES.iter().map(|s| s.to_string()).collect()
        } else {
            args.holdout_families
        },
        test_size: args.test_size,
        ..Default::default()
    };
    if let Some(path) = &args.config {
        let part = Generator::from_config(load_config(path)?)?.partition()?;
        spec.test_pose_indices = Some(part.test_poses);
        spec.test_camera_settings = Some(part.test_camera_settings);
        spec.test_sceneries = Some(part.test_sceneries);
    }
    let (train, test) = build_split(&manifest, &spec)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    train.write(&args.out.join("train.jsonl"))?;
    test.write(&args.out.join("test.jsonl"))?;
    println!("train {} samples, test {} samples", train.records.len(), test.records.len());
    Ok(Outcome::Ok)
}

fn eval(args: EvalArgs) -> anyhow::Result<Outcome> {
    let body = match (&args.body_model, &args.config) {
        (Some(p), _) => p.clone(),
        (None, Some(c)) => load_config(c)?.assets.body_model,
        (None, None) => bail!(zoosynth::Error::Config("eval needs --body-model or --config".into())),
    };
    let asset = load_asset(&body).map_err(|e| zoosynth::Error::Config(format!("body model {}: {e}", body.display())))?;
    let manifest = Manifest::load(&args.manifest)?;
    let predictions = pipeline::load_predictions(&args.predictions)?;
    let report = pipeline::evaluate(&asset, &manifest, &predictions, args.alpha)?;
    if let Some(csv) = &args.csv {
        std::fs::write(csv, report.to_csv()).with_context(|| format!("writing {}", csv.display()))?;
    }
    print!("{}", report.to_text(args.display_multiplier));
    Ok(Outcome::Ok)
}

fn preview(args: PreviewArgs) -> anyhow::Result<Outcome> {
    let manifest = Manifest::load(&args.manifest)?;
    let root = args.manifest.parent().unwrap_or(Path::new("."));
    let png = pipeline::preview_png(&manifest, root, &args.sample)?;
    std::fs::write(&args.out, png).with_context(|| format!("writing {}", args.out.display()))?;
    println!("wrote {}", args.out.display());
    Ok(Outcome::Ok)
}

fn fit_shapes(args: FitArgs) -> anyhow::Result<Outcome> {
    let set = pipeline::fit_priors_from_dir(&args.banks, args.shrinkage)?;
    write_priors(&args.out, &set)?;
    println!("wrote {} priors ({}-d) to {}", set.priors.len(), set.dim, args.out.display());
    Ok(Outcome::Ok)
}

fn demo_assets(args: DemoArgs) -> anyhow::Result<Outcome> {
    let opts = DemoOptions {
        n_poses: args.poses,
        embedding_dim: args.dim,
        seed: args.seed,
        write_banks: !args.no_banks,
    };
    let config = pipeline::write_demo_assets(&args.out, &opts)?;
    println!("wrote demo assets; config at {}", config.display());
    Ok(Outcome::Ok)
}

fn is_config_error(err: &anyhow::Error) -> bool {
    err.chain()
        .any(|c| c.downcast_ref::<zoosynth::Error>().is_some_and(zoosynth::Error::is_config))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    env_logger::Builder::new().parse_filters(&cli.log_level).init();
    let result = match cli.command {
        Command::Generate(a) => generate(a),
        Command::Split(a) => split(a),
        Command::Eval(a) => eval(a),
        Command::Preview(a) => preview(a),
        Command::FitShapes(a) => fit_shapes(a),
        Command::DemoAssets(a) => demo_assets(a),
    };
    match result {
        Ok(Outcome::Ok) => ExitCode::SUCCESS,
        Ok(Outcome::RunFailed) => ExitCode::from(EXIT_RUN_FAILURE),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(if is_config_error(&e) { EXIT_CONFIG } else { EXIT_RUN_FAILURE })
        }
    }
}
