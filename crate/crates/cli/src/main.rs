use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;
use tubesynth::augment::AugmentSpec;
use tubesynth::dataset::{self, AugmentMode, EvalOptions, EvalReport, GenerationConfig, PreprocessOptions};
use tubesynth::preprocess::{ClaheParams, DenoiseHook};
use tubesynth::profile::{CrossSectionSpec, ProfileKind};

#[derive(Parser)]
#[command(
    name = "tubesynth",
    version,
    about = "Synthetic catheter radiographs and segmentation scoring"
)]
struct Cli {
    /// Worker threads; 0 uses one per core.
    #[arg(long, global = true, env = dataset::WORKERS_ENV, default_value_t = 0)]
    workers: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Composite catheters and text onto backgrounds and write labelled pairs.
    Generate(GenerateArgs),
    /// Denoise hook, resize and CLAHE every PNG in a directory.
    Preprocess(PreprocessArgs),
    /// Rotate, flip, scale and crop image/label pairs.
    Augment(AugmentArgs),
    /// Score catheter likelihood maps against label maps.
    Evaluate(EvaluateArgs),
    /// Dump the tube cross-section, its sinogram and projection profiles.
    ShowProfile(ShowProfileArgs),
}

#[derive(Args)]
struct GenerateArgs {
    /// Generation config (TOML).
    #[arg(long, required_unless_present = "manifest")]
    config: Option<PathBuf>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the number of pairs.
    #[arg(long)]
    count: Option<usize>,
    /// Re-render the pairs recorded in this manifest instead of sampling new ones.
    #[arg(long, conflicts_with_all = ["config", "seed", "count"], requires = "out")]
    manifest: Option<PathBuf>,
}

#[derive(Args)]
struct PreprocessArgs {
    /// Directory of input PNGs.
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Preprocess options (TOML); flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Aspect-preserving resize to this width.
    #[arg(long)]
    width: Option<usize>,
    /// Apply CLAHE with default parameters unless the config sets them.
    #[arg(long)]
    clahe: bool,
    /// Directory of externally denoised images with matching names.
    #[arg(long)]
    denoised_dir: Option<PathBuf>,
}

#[derive(Args)]
struct AugmentArgs {
    #[arg(long)]
    images: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Fixed transform (TOML with rotation_deg, hflip, scale, out_size).
    #[arg(long, conflicts_with_all = ["seed", "rotation", "scale", "flip"])]
    config: Option<PathBuf>,
    /// Seed for per-pair random transforms (the default mode).
    #[arg(long, conflicts_with_all = ["rotation", "scale", "flip"])]
    seed: Option<u64>,
    /// Fixed rotation in degrees.
    #[arg(long, allow_hyphen_values = true)]
    rotation: Option<f64>,
    /// Fixed scale factor.
    #[arg(long)]
    scale: Option<f64>,
    /// Fixed horizontal flip.
    #[arg(long)]
    flip: bool,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of catheter likelihood PNGs.
    #[arg(long)]
    pred: PathBuf,
    /// Directory of label PNGs with the same file names.
    #[arg(long)]
    truth: PathBuf,
    /// Write report.json and pr_curve.png here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Evaluation options (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Minimum connected-component area kept after thresholding.
    #[arg(long)]
    min_area: Option<usize>,
}

#[derive(Args)]
struct ShowProfileArgs {
    #[arg(long)]
    out: PathBuf,
    /// Cross-section parameters (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Use the plain tube (no strip).
    #[arg(long)]
    plain: bool,
    /// Angles of the plotted profiles, in degrees.
    #[arg(long, value_delimiter = ',', default_value = "0,30,60,90")]
    angles: Vec<f64>,
    /// Sinogram rows over [0, 180).
    #[arg(long, default_value_t = 180)]
    sinogram_angles: usize,
}

enum Failure {
    Usage(String),
    Run(tubesynth::Error),
}

impl From<tubesynth::Error> for Failure {
    fn from(e: tubesynth::Error) -> Self {
        Failure::Run(e)
    }
}

type Outcome = Result<(), Failure>;

fn read_toml<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, Failure> {
    let text = std::fs::read_to_string(path).map_err(|source| tubesynth::Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    toml::from_str(&text).map_err(|e| Failure::Run(tubesynth::Error::Config(format!("{}: {e}", path.display()))))
}

fn write_json(path: &Path, value: &impl serde::Serialize) -> Outcome {
    let text = serde_json::to_string_pretty(value).map_err(|e| tubesynth::Error::Encode {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    std::fs::write(path, text + "\n").map_err(|source| {
        Failure::Run(tubesynth::Error::Io {
            path: path.to_path_buf(),
            source,
        })
    })
}

fn generate(a: GenerateArgs, workers: usize) -> Outcome {
    if let Some(m) = a.manifest {
        let manifest = dataset::load_manifest(&m)?;
        let out = a.out.expect("clap enforces --out");
        dataset::regenerate(&manifest, &out, workers)?;
        println!("regenerated {} pairs into {}", manifest.records.len(), out.display());
        return Ok(());
    }
    let path = a.config.expect("clap enforces --config");
    let mut cfg: GenerationConfig = read_toml(&path)?;
    if let Some(s) = a.seed {
        cfg.master_seed = s;
    }
    if let Some(o) = a.out {
        cfg.output_dir = o;
    }
    if let Some(c) = a.count {
        cfg.count = c;
    }
    let manifest = dataset::generate(&cfg, workers)?;
    println!(
        "wrote {} pairs and {} to {}",
        manifest.records.len(),
        dataset::MANIFEST_FILE,
        cfg.output_dir.display()
    );
    Ok(())
}

fn report_batch(summary: &dataset::BatchSummary) {
    println!("processed {} files", summary.processed.len());
    for (name, why) in &summary.failed {
        eprintln!("skipped {name}: {why}");
    }
}

fn preprocess(a: PreprocessArgs, workers: usize) -> Outcome {
    let mut opts: PreprocessOptions = match &a.config {
        Some(p) => read_toml(p)?,
        None => PreprocessOptions::default(),
    };
    if a.width.is_some() {
        opts.width = a.width;
    }
    if a.clahe && opts.clahe.is_none() {
        opts.clahe = Some(ClaheParams::default());
    }
    if let Some(d) = a.denoised_dir {
        opts.denoise = DenoiseHook::Substitute(d);
    }
    if let Some(c) = &opts.clahe {
        c.validate()?;
    }
    let summary = dataset::preprocess_dir(&a.input, &a.out, &opts, workers)?;
    report_batch(&summary);
    Ok(())
}

fn augment(a: AugmentArgs, workers: usize) -> Outcome {
    let mode = if let Some(p) = &a.config {
        AugmentMode::Fixed(read_toml(p)?)
    } else if a.rotation.is_some() || a.scale.is_some() || a.flip {
        AugmentMode::Fixed(AugmentSpec {
            rotation_deg: a.rotation.unwrap_or(0.0),
            scale: a.scale.unwrap_or(1.0),
            hflip: a.flip,
            ..AugmentSpec::identity()
        })
    } else {
        AugmentMode::Random {
            seed: a.seed.unwrap_or(0),
        }
    };
    if let AugmentMode::Fixed(s) = &mode {
        s.validate()?;
    }
    let (summary, specs) = dataset::augment_dir(&a.images, &a.labels, &a.out, mode, workers)?;
    report_batch(&summary);
    let specs: Vec<_> = specs
        .iter()
        .map(|(name, s)| json!({ "file": name, "spec": s }))
        .collect();
    write_json(&a.out.join("augment.json"), &specs)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn print_report(r: &EvalReport) {
    println!("{:<24} {:>7} {:>8} {:>8} {:>8}", "image", "t_seg", "P", "R", "F_beta");
    for im in &r.images {
        let a = &im.adaptive;
        println!(
            "{:<24} {:>7.2} {:>8} {:>8} {:>8}",
            im.name,
            im.t_seg,
            fmt_opt(a.precision),
            fmt_opt(a.recall),
            fmt_opt(a.f_beta)
        );
    }
    if let Some(agg) = &r.aggregate {
        for (label, p) in [
            ("micro (adaptive)", &agg.micro_adaptive),
            ("macro (adaptive)", &agg.macro_adaptive),
        ] {
            println!(
                "{:<24} {:>7.2} {:>8} {:>8} {:>8}",
                label,
                p.threshold,
                fmt_opt(p.precision),
                fmt_opt(p.recall),
                fmt_opt(p.f_beta)
            );
        }
        println!("threshold sweep (micro):");
        for p in &agg.micro_curve {
            println!(
                "  t={:<5} P={} R={} F={}",
                p.threshold,
                fmt_opt(p.precision),
                fmt_opt(p.recall),
                fmt_opt(p.f_beta)
            );
        }
    }
    for n in &r.unpaired_predictions {
        eprintln!("no truth for prediction {n}");
    }
    for n in &r.unpaired_truths {
        eprintln!("no prediction for truth {n}");
    }
    for (n, why) in &r.failures {
        eprintln!("could not score {n}: {why}");
    }
}

fn evaluate(a: EvaluateArgs, workers: usize) -> Outcome {
    let mut opts: EvalOptions = match &a.config {
        Some(p) => read_toml(p)?,
        None => EvalOptions::default(),
    };
    if let Some(m) = a.min_area {
        opts.min_area = m;
    }
    let report = dataset::evaluate(&a.pred, &a.truth, &opts, workers)?;
    print_report(&report);
    if let Some(out) = &a.out {
        std::fs::create_dir_all(out).map_err(|source| tubesynth::Error::Io {
            path: out.clone(),
            source,
        })?;
        write_json(&out.join("report.json"), &report)?;
        if let Some(agg) = &report.aggregate {
            dataset::render_pr_plot(&[&agg.micro_curve, &agg.macro_curve], &out.join("pr_curve.png"))?;
        }
    }
    Ok(())
}

fn show_profile(a: ShowProfileArgs) -> Outcome {
    let mut spec: CrossSectionSpec = match &a.config {
        Some(p) => read_toml(p)?,
        None => CrossSectionSpec::default(),
    };
    if a.plain {
        spec.kind = ProfileKind::PlainTube;
    }
    if a.sinogram_angles == 0 {
        return Err(Failure::Usage("--sinogram-angles must be positive".into()));
    }
    let dump = dataset::show_profile(&spec, &a.angles, a.sinogram_angles, &a.out)?;
    println!(
        "wrote {} profiles ({} bins) to {}",
        dump.profiles.len(),
        dump.profiles.first().map_or(0, |p| p.len()),
        a.out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Outcome {
    let w = cli.workers;
    match cli.command {
        Command::Generate(a) => generate(a, w),
        Command::Preprocess(a) => preprocess(a, w),
        Command::Augment(a) => augment(a, w),
        Command::Evaluate(a) => evaluate(a, w),
        Command::ShowProfile(a) => show_profile(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Run(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_io() { 2 } else { 3 })
        }
    }
}
