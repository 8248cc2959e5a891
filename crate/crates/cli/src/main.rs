mod analyze;
mod bench;
mod selftest;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use promist_core::dataset::{generate, GenerateOptions, DEFAULT_SEED, DEFAULT_SPLIT_RATIO};
use promist_core::profile::{layer_ablation, PROFILE_WIDTH, REFERENCE_LAYERS};
use promist_core::{
    derive_params, emulate, parse_setting, read_image, write_png, Density, FilterConfig, ParamsFile, ToneOperator,
    Transfer,
};

#[derive(Parser)]
#[command(
    name = "promist",
    version,
    about = "Diffusion filter emulation and paired dataset tooling"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Filter a single image.
    Apply(ApplyArgs),
    /// Build a paired train/test dataset from a directory of images.
    Generate(GenerateArgs),
    /// Compare originals with filtered images (HSV statistics, PSNR, SSIM).
    Analyze(analyze::AnalyzeArgs),
    /// Compare reduced layer counts against a dense blur schedule.
    AblateLayers(AblateArgs),
    /// Measure blur and full-pipeline throughput on a random image.
    Bench(bench::BenchArgs),
    /// Run quick internal consistency checks.
    Selftest,
}

#[derive(Args)]
struct SharedFilterArgs {
    /// Number of blur layers.
    #[arg(long)]
    layers: Option<usize>,
    /// Tone operator applied before encoding: clamp or reinhard.
    #[arg(long)]
    tone: Option<ToneOperator>,
    /// TOML file with filter parameters; flags take precedence.
    #[arg(long)]
    params: Option<PathBuf>,
}

#[derive(Args)]
struct ApplyArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    output: PathBuf,
    /// Filter strength, e.g. 1/8 or 1/2.
    #[arg(long)]
    density: Option<Density>,
    /// Lens focal length in millimetres.
    #[arg(long)]
    focal: Option<f64>,
    /// Use a pure power-law transfer with this exponent instead of sRGB.
    #[arg(long)]
    gamma: Option<f64>,
    #[command(flatten)]
    shared: SharedFilterArgs,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_SEED)]
    seed: u64,
    /// Fraction of images assigned to the training split.
    #[arg(long, default_value_t = DEFAULT_SPLIT_RATIO)]
    ratio: f64,
    /// Comma-separated settings such as 1/8@20,1/2@50; defaults to the 2x2 grid.
    #[arg(long, value_delimiter = ',')]
    configs: Option<Vec<String>>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    shared: SharedFilterArgs,
}

#[derive(Args)]
struct AblateArgs {
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, value_delimiter = ',', default_value = "1,2,4,6")]
    layer_counts: Vec<usize>,
    #[arg(long, default_value = "1/2")]
    density: Density,
    #[arg(long, default_value_t = 20.0)]
    focal: f64,
}

fn invalid(msg: impl Into<String>) -> anyhow::Error {
    promist_core::Error::Parameter(msg.into()).into()
}

fn load_params(path: Option<&Path>) -> Result<Option<ParamsFile>> {
    path.map(|p| ParamsFile::load(p).map_err(Into::into)).transpose()
}

fn apply_shared(cfg: &mut FilterConfig, params: Option<&ParamsFile>, shared: &SharedFilterArgs) -> Result<()> {
    if let Some(p) = params {
        p.apply_shared(cfg)?;
    }
    if let Some(n) = shared.layers {
        cfg.layer_count = n;
    }
    if let Some(t) = shared.tone {
        cfg.tone_operator = t;
    }
    cfg.validate()?;
    Ok(())
}

fn describe(cfg: &FilterConfig) -> String {
    format!(
        "{} density={} focal_mm={} layers={} base_sigma={} reference_width={} weight_ratio={} tone={} transfer={}",
        cfg.label(),
        cfg.density,
        cfg.focal_mm,
        cfg.layer_count,
        cfg.base_sigma,
        cfg.reference_width,
        cfg.weight_ratio(),
        cfg.tone_operator,
        cfg.transfer,
    )
}

fn run_apply(args: &ApplyArgs) -> Result<()> {
    let params = load_params(args.shared.params.as_deref())?;
    let density = args
        .density
        .or(params.as_ref().and_then(|p| p.density))
        .ok_or_else(|| invalid("--density is required (or set density in --params)"))?;
    let focal = args
        .focal
        .or(params.as_ref().and_then(|p| p.focal_mm))
        .ok_or_else(|| invalid("--focal is required (or set focal_mm in --params)"))?;
    let mut cfg = FilterConfig::new(density, focal);
    if let Some(g) = args.gamma {
        cfg.transfer = Transfer::Gamma(g);
    }
    apply_shared(&mut cfg, params.as_ref(), &args.shared)?;

    let img = read_image(&args.input)?;
    let stack = derive_params(&cfg, img.width())?;
    eprintln!("promist apply: {}", describe(&cfg));
    let sigmas: Vec<String> = stack
        .layers()
        .iter()
        .map(|l| format!("{:.4}:{:.4}", l.sigma, l.weight))
        .collect();
    eprintln!(
        "  {}x{} {}-bit, alpha={}, layers(sigma:weight)=[{}]",
        img.width(),
        img.height(),
        img.bit_depth().bits(),
        stack.alpha(),
        sigmas.join(", ")
    );
    let out = emulate(&img, &cfg)?;
    write_png(&args.output, &out)?;
    println!("wrote {}", args.output.display());
    Ok(())
}

fn run_generate(args: &GenerateArgs) -> Result<()> {
    let params = load_params(args.shared.params.as_deref())?;
    let mut configs = match &args.configs {
        Some(list) => {
            let list: Vec<&String> = list.iter().filter(|s| !s.trim().is_empty()).collect();
            if list.is_empty() {
                return Err(invalid("--configs is empty"));
            }
            list.into_iter()
                .map(|s| parse_setting(s).map(|(d, f)| FilterConfig::new(d, f)))
                .collect::<promist_core::Result<Vec<_>>>()?
        }
        None => FilterConfig::default_grid(),
    };
    for cfg in &mut configs {
        apply_shared(cfg, params.as_ref(), &args.shared)?;
    }
    eprintln!(
        "promist generate: corpus={} out={} seed={} ratio={} jobs={}",
        args.corpus.display(),
        args.out.display(),
        args.seed,
        args.ratio,
        args.jobs.map_or("auto".to_string(), |j| j.to_string())
    );
    for cfg in &configs {
        eprintln!("  {}", describe(cfg));
    }
    let opts = GenerateOptions {
        seed: args.seed,
        split_ratio: args.ratio,
        jobs: args.jobs,
    };
    let (manifest, summary) = generate(&args.corpus, &configs, &args.out, &opts)?;
    println!(
        "{} sources: {} processed ({} train, {} test), {} skipped",
        summary.sources, summary.processed, summary.train, summary.test, summary.skipped
    );
    for (label, n) in &summary.outputs_per_config {
        println!("  {label}: {n} images");
    }
    for entry in manifest.entries.iter().filter(|e| e.skipped.is_some()) {
        eprintln!(
            "skipped {}: {}",
            entry.source,
            entry.skipped.as_deref().unwrap_or_default()
        );
    }
    Ok(())
}

fn run_ablate(args: &AblateArgs) -> Result<()> {
    let cfg = FilterConfig::new(args.density, args.focal);
    cfg.validate()?;
    if args.layer_counts.is_empty() {
        return Err(invalid("--layer-counts is empty"));
    }
    eprintln!(
        "promist ablate-layers: {} counts={:?} profile_width={PROFILE_WIDTH} reference_layers={REFERENCE_LAYERS}",
        describe(&cfg),
        args.layer_counts
    );
    let rows = layer_ablation(&cfg, &args.layer_counts, PROFILE_WIDTH, REFERENCE_LAYERS)?;
    let img = read_image(&args.input)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    for &n in &args.layer_counts {
        let mut c = cfg.clone();
        c.layer_count = n;
        write_png(&args.out.join(format!("layers_{n}.png")), &emulate(&img, &c)?)?;
    }
    let mut csv = String::from("layer_count,l2_distance\n");
    println!("layer_count  l2_distance");
    for row in &rows {
        csv.push_str(&format!("{},{}\n", row.layer_count, row.l2_distance));
        println!("{:>11}  {:.6e}", row.layer_count, row.l2_distance);
    }
    let path = args.out.join("ablation.csv");
    std::fs::write(&path, csv).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    let invalid = err.chain().any(|e| {
        e.downcast_ref::<promist_core::Error>()
            .is_some_and(promist_core::Error::is_invalid_input)
    });
    if invalid {
        2
    } else {
        1
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Apply(a) => run_apply(a),
        Command::Generate(a) => run_generate(a),
        Command::Analyze(a) => analyze::run(a),
        Command::AblateLayers(a) => run_ablate(a),
        Command::Bench(a) => bench::run(a),
        Command::Selftest => selftest::run(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
