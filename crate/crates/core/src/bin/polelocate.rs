use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use polelocate::config::PipelineConfig;
use polelocate::corner::{detect_top_n, CornerSet};
use polelocate::error::{Error, ErrorKind, Result};
use polelocate::eval::{evaluate, format_table, relative_gain, EvalReport};
use polelocate::imagecore::{load_image, GrayImage, Point2};
use polelocate::overlay::{save_overlay, Overlay};
use polelocate::pipeline::{
    correct_in_roi, join_with_manifest, load_results, read_json, run_batch, to_global_records,
    write_json, write_results, BatchItem, PositionKind, PredictionFile, SampleRecord,
};
use polelocate::regress::predict_poles;
use polelocate::roi::{estimate_roi, Roi};
use polelocate::synthgen::{generate_dataset, load_manifest, manifest_image_path, CellSpec};

#[derive(Parser)]
#[command(
    name = "polelocate",
    version,
    about = "Locate electrode poles in battery X-ray images"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Detect and rank FAST corners.
    DetectCorners(DetectArgs),
    /// Estimate the pole ROI from corners.
    EstimateRoi(RoiArgs),
    /// Predict poles inside an ROI.
    Predict(PredictArgs),
    /// Correct predictions with corner priors.
    Correct(CorrectArgs),
    /// Run the full pipeline on one image or a manifest.
    Pipeline(PipelineArgs),
    /// Score results against a manifest.
    Evaluate(EvaluateArgs),
    /// Generate a synthetic dataset.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ConfigArg {
    /// Pipeline configuration (TOML).
    #[arg(long)]
    config: Option<PathBuf>,
}

impl ConfigArg {
    fn load(&self) -> Result<PipelineConfig> {
        let cfg = match &self.config {
            Some(p) => PipelineConfig::load(p)?,
            None => PipelineConfig::default(),
        };
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Args)]
struct DetectArgs {
    image: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Number of corners to keep (overrides the config).
    #[arg(long)]
    n: Option<usize>,
    /// FAST threshold (overrides the config).
    #[arg(long)]
    threshold: Option<u8>,
    #[arg(long)]
    out: PathBuf,
    /// Optional PNG with the corners marked.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Args)]
struct RoiArgs {
    image: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Corner file from detect-corners; detected afresh when absent.
    #[arg(long)]
    corners: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PredictArgs {
    image: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// ROI file from estimate-roi.
    #[arg(long)]
    roi: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorrectArgs {
    image: PathBuf,
    #[command(flatten)]
    config: ConfigArg,
    /// Prediction file from predict.
    #[arg(long)]
    predictions: PathBuf,
    /// Corner file from detect-corners.
    #[arg(long)]
    corners: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PipelineArgs {
    /// A single image.
    #[arg(
        long,
        conflicts_with = "manifest",
        required_unless_present = "manifest"
    )]
    image: Option<PathBuf>,
    /// A dataset manifest.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[command(flatten)]
    config: ConfigArg,
    #[arg(long)]
    out: PathBuf,
    /// Directory for annotated PNG overlays.
    #[arg(long)]
    overlay: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// One or more results files; several files form a sweep.
    #[arg(required = true)]
    results: Vec<PathBuf>,
    #[arg(long)]
    manifest: PathBuf,
    /// Comma-separated PCK/PCS thresholds as fractions of the reference distance.
    #[arg(long, value_delimiter = ',')]
    thetas: Option<Vec<f64>>,
    #[command(flatten)]
    config: ConfigArg,
    /// Row labels, one per results file; file stems by default.
    #[arg(long, value_delimiter = ',')]
    labels: Option<Vec<String>>,
    #[arg(long)]
    json: Option<PathBuf>,
    /// CSV with one corrected row per results file.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    /// Generator settings (TOML); defaults when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    n: usize,
    #[arg(long)]
    out: PathBuf,
    /// Overrides the seed in the spec.
    #[arg(long)]
    seed: Option<u64>,
}

fn stem(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn detect(img: &GrayImage, cfg: &PipelineConfig) -> Result<CornerSet> {
    detect_top_n(img, cfg.corner.n, cfg.corner.threshold)
}

fn cmd_detect(args: DetectArgs) -> Result<()> {
    let mut cfg = args.config.load()?;
    if let Some(n) = args.n {
        cfg.corner.n = n;
    }
    if let Some(t) = args.threshold {
        cfg.corner.threshold = t;
    }
    cfg.validate()?;
    let img = load_image(&args.image)?;
    let corners = detect(&img, &cfg)?;
    write_json(&args.out, &corners)?;
    if let Some(path) = &args.overlay {
        let overlay = Overlay {
            corners: Some(&corners),
            ..Default::default()
        };
        save_overlay(&img, &overlay, path)?;
    }
    println!("{} corners", corners.len());
    Ok(())
}

fn cmd_roi(args: RoiArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let img = load_image(&args.image)?;
    let corners = match &args.corners {
        Some(p) => read_json::<CornerSet>(p)?,
        None => detect(&img, &cfg)?,
    };
    let est = estimate_roi(&img, &corners, &cfg.roi)?;
    if est.bounds.degenerate {
        log::warn!("flat row profile; ROI spans the full height");
    }
    write_json(&args.out, &est.roi)?;
    let r = est.roi;
    println!(
        "roi top={} bottom={} left={} right={}",
        r.top, r.bottom, r.left, r.right
    );
    Ok(())
}

fn cmd_predict(args: PredictArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let img = load_image(&args.image)?;
    let roi: Roi = read_json(&args.roi)?;
    let crop = roi.crop(&img)?;
    let predictor = cfg.predictor.build()?;
    let preds = predict_poles(
        predictor.as_ref(),
        &crop,
        cfg.predictor.num_poles,
        Some(&stem(&args.image)),
    )?;
    write_json(&args.out, &PredictionFile::from_local(roi, &preds))?;
    println!("{} poles", preds.len());
    Ok(())
}

fn cmd_correct(args: CorrectArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let img = load_image(&args.image)?;
    let file: PredictionFile = read_json(&args.predictions)?;
    let corners: CornerSet = read_json(&args.corners)?;
    let crop = file.roi.crop(&img)?;
    let preds = file.to_local();
    let corrected = correct_in_roi(&crop, &corners, &file.roi, &preds, &cfg)?;
    let record = SampleRecord {
        sample_id: stem(&args.image),
        roi: Some(file.roi),
        poles: to_global_records(&file.roi, &preds, &corrected),
        error: None,
    };
    write_results(&args.out, &[record])?;
    Ok(())
}

fn cmd_pipeline(args: PipelineArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let items: Vec<BatchItem> = match (&args.image, &args.manifest) {
        (Some(path), _) => vec![BatchItem {
            sample_id: stem(path),
            path: path.clone(),
        }],
        (None, Some(m)) => load_manifest(m)?
            .iter()
            .map(|e| BatchItem {
                sample_id: e.sample_id(),
                path: manifest_image_path(m, e),
            })
            .collect(),
        (None, None) => {
            return Err(Error::InvalidArgument(
                "one of --image or --manifest is required".into(),
            ))
        }
    };
    let out = run_batch(&items, &cfg)?;
    if let Some(dir) = &args.overlay {
        fs::create_dir_all(dir)?;
        for (item, (record, outcome)) in items.iter().zip(&out) {
            let Some(outcome) = outcome else { continue };
            let img = load_image(&item.path)?;
            let raw: Vec<Point2> = record
                .poles
                .iter()
                .map(|p| Point2::new(p.raw.x, p.raw.y))
                .collect();
            let corrected: Vec<Point2> = record.poles.iter().map(|p| p.corrected.into()).collect();
            let overlay = Overlay {
                roi: record.roi,
                corners: Some(&outcome.corners),
                raw: &raw,
                corrected: &corrected,
            };
            save_overlay(
                &img,
                &overlay,
                dir.join(format!("{}.png", record.sample_id)),
            )?;
        }
    }
    let records: Vec<SampleRecord> = out.into_iter().map(|(r, _)| r).collect();
    let failed = records.iter().filter(|r| r.error.is_some()).count();
    write_results(&args.out, &records)?;
    println!("{} images, {} failed", records.len(), failed);
    Ok(())
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let cfg = args.config.load()?;
    let thetas = args.thetas.clone().unwrap_or(cfg.eval.thetas);
    let manifest = load_manifest(&args.manifest)?;
    let labels: Vec<String> = match &args.labels {
        Some(l) if l.len() == args.results.len() => l.clone(),
        Some(l) => {
            return Err(Error::InvalidArgument(format!(
                "{} labels for {} results files",
                l.len(),
                args.results.len()
            )))
        }
        None => args.results.iter().map(|p| stem(p)).collect(),
    };
    let mut json_rows = Vec::new();
    let mut csv_rows: Vec<(String, EvalReport)> = Vec::new();
    for (path, label) in args.results.iter().zip(&labels) {
        let records = load_results(path)?;
        let raw = evaluate(
            &join_with_manifest(&records, &manifest, PositionKind::Raw)?,
            &thetas,
        )?;
        let corrected = evaluate(
            &join_with_manifest(&records, &manifest, PositionKind::Corrected)?,
            &thetas,
        )?;
        let gain = relative_gain(&raw, &corrected)?;
        let rows = vec![
            (format!("{label} uncorrected"), raw.clone()),
            (format!("{label} corrected"), corrected.clone()),
        ];
        println!("{}", format_table(&rows, Some(&gain)));
        json_rows.push(json!({
            "label": label,
            "uncorrected": raw.to_json(),
            "corrected": corrected.to_json(),
            "gain": gain,
        }));
        csv_rows.push((label.clone(), corrected));
    }
    if let Some(path) = &args.json {
        write_json(path, &json_rows)?;
    }
    if let Some(path) = &args.csv {
        let mut text = csv_rows[0].1.csv_header();
        text.push('\n');
        for (label, report) in &csv_rows {
            text.push_str(&report.csv_row(label));
            text.push('\n');
        }
        fs::write(path, text)?;
    }
    Ok(())
}

fn cmd_synth(args: SynthArgs) -> Result<()> {
    if args.n == 0 {
        return Err(Error::InvalidArgument("--n must be at least 1".into()));
    }
    let mut spec = match &args.spec {
        Some(p) => {
            if !p.is_file() {
                return Err(Error::FileNotFound(p.clone()));
            }
            toml::from_str::<CellSpec>(&fs::read_to_string(p)?)
                .map_err(|e| Error::InvalidConfig(e.to_string()))?
        }
        None => CellSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.seed = seed;
    }
    spec.validate()?;
    let manifest = generate_dataset(&spec, args.n, &args.out)?;
    println!(
        "{} samples written to {}",
        manifest.len(),
        args.out.display()
    );
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::DetectCorners(a) => cmd_detect(a),
        Command::EstimateRoi(a) => cmd_roi(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Correct(a) => cmd_correct(a),
        Command::Pipeline(a) => cmd_pipeline(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Synth(a) => cmd_synth(a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e.kind() {
                ErrorKind::Usage => 1,
                ErrorKind::Data => 2,
                ErrorKind::Internal => 3,
            })
        }
    }
}
