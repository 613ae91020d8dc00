//! Command-line interface: argument types, config-file merging and the
//! subcommand dispatch. Exit codes: 0 success, 1 usage/config error,
//! 2 i/o or decode error, 3 numerical/solver failure.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use stevq_core::dlm::DLM_LEVELS;
use stevq_core::features::{FeatureParams, FeatureTable, ModelLayout, FEATURE_COLUMNS};
use stevq_core::pooling::{HysteresisParams, PoolingMethod};
use stevq_core::FEATURE_EXTRACTOR_VERSION;

use crate::config::ConfigFile;
use crate::error::{AppError, Result};
use crate::features_io::{render_feature_csv, FeatureCache};
use crate::manifest::DatasetManifest;
use crate::model_file::{load_model, save_model};
use crate::pipeline::{
    evaluate_manifest, extract_pair, monotonicity_grid, train_models, CacheStatus, ExtractOptions,
    LayoutSelection, PoolingConfig, Predictor, TrainOverrides,
};
use crate::report::{render_grid_csv, render_violations};
use crate::video::{PixelFormat, RawGeometry};

#[derive(Parser, Debug)]
#[command(
    name = "stevq",
    version,
    about = "Full-reference video quality engine: feature extraction, SVR fusion, evaluation"
)]
struct Cli {
    /// Key-value config file; explicit flags win over it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Extract per-frame features for a video pair or a whole manifest.
    Extract(ExtractArgs),
    /// Train model(s) on a manifest with subjective scores.
    Train(TrainArgs),
    /// Predict per-frame and pooled quality for one video pair.
    Predict(PredictArgs),
    /// Evaluate a predictor against a scored manifest, per dataset tag.
    Evaluate(EvaluateArgs),
    /// Predict a (resolution x CRF) grid and audit its monotonicity.
    Monotonicity(MonotonicityArgs),
}

#[derive(Args, Debug, Clone)]
struct PairArgs {
    /// Reference video (.y4m self-describing, anything else headerless).
    #[arg(long = "ref")]
    reference: Option<PathBuf>,
    /// Distorted video.
    #[arg(long)]
    dist: Option<PathBuf>,
    /// Pixel format for headerless input: yuv420p8b | yuv420p10b.
    #[arg(long)]
    pix_fmt: Option<String>,
    /// Width for headerless input.
    #[arg(long)]
    width: Option<usize>,
    /// Height for headerless input.
    #[arg(long)]
    height: Option<usize>,
    /// Frame rate for headerless input.
    #[arg(long)]
    fps: Option<f64>,
}

impl PairArgs {
    fn merge(&mut self, cfg: &ConfigFile) -> Result<()> {
        cfg.merge(&mut self.reference, "ref")?;
        cfg.merge(&mut self.dist, "dist")?;
        cfg.merge(&mut self.pix_fmt, "pix-fmt")?;
        cfg.merge(&mut self.width, "width")?;
        cfg.merge(&mut self.height, "height")?;
        cfg.merge(&mut self.fps, "fps")
    }

    fn geometry(&self) -> Result<Option<RawGeometry>> {
        match (&self.pix_fmt, self.width, self.height, self.fps) {
            (None, None, None, None) => Ok(None),
            (Some(fmt), Some(width), Some(height), Some(frame_rate)) => {
                let format = PixelFormat::from_id(fmt).ok_or_else(|| {
                    AppError::Config(format!(
                        "unsupported pixel format '{fmt}' (yuv420p8b | yuv420p10b)"
                    ))
                })?;
                Ok(Some(RawGeometry {
                    format,
                    width,
                    height,
                    frame_rate,
                }))
            }
            _ => Err(AppError::Config(
                "headerless input needs all of --pix-fmt, --width, --height, --fps".into(),
            )),
        }
    }

    fn require_pair(&self) -> Result<(&Path, &Path)> {
        match (&self.reference, &self.dist) {
            (Some(r), Some(d)) => Ok((r, d)),
            _ => Err(AppError::Config(
                "--ref and --dist are both required".into(),
            )),
        }
    }
}

#[derive(Args, Debug, Clone)]
struct FeatureArgs {
    /// GSM block side length.
    #[arg(long)]
    block_size: Option<usize>,
    /// GSM sensor noise variance.
    #[arg(long)]
    noise_variance: Option<f64>,
    /// VIF window sigma at scale 0.
    #[arg(long)]
    vif_sigma: Option<f64>,
    /// VIF sensor noise variance.
    #[arg(long)]
    vif_noise: Option<f64>,
    /// VIF gain stabilizer.
    #[arg(long)]
    vif_stabilizer: Option<f64>,
    /// Comma-separated CSF weights for the four wavelet levels.
    #[arg(long)]
    csf_weights: Option<String>,
    /// Feature cache directory (content-addressed); omit to disable.
    #[arg(long)]
    cache_dir: Option<PathBuf>,
    /// Worker threads for frame-parallel extraction.
    #[arg(long)]
    threads: Option<usize>,
}

impl FeatureArgs {
    fn merge(&mut self, cfg: &ConfigFile) -> Result<()> {
        cfg.merge(&mut self.block_size, "block-size")?;
        cfg.merge(&mut self.noise_variance, "noise-variance")?;
        cfg.merge(&mut self.vif_sigma, "vif-sigma")?;
        cfg.merge(&mut self.vif_noise, "vif-noise")?;
        cfg.merge(&mut self.vif_stabilizer, "vif-stabilizer")?;
        cfg.merge(&mut self.csf_weights, "csf-weights")?;
        cfg.merge(&mut self.cache_dir, "cache-dir")?;
        cfg.merge(&mut self.threads, "threads")
    }

    fn feature_params(&self) -> Result<FeatureParams> {
        let mut params = FeatureParams::default();
        if let Some(b) = self.block_size {
            params.block_size = b;
        }
        if let Some(v) = self.noise_variance {
            params.noise_variance = v;
        }
        if let Some(v) = self.vif_sigma {
            params.vif.window_sigma = v;
        }
        if let Some(v) = self.vif_noise {
            params.vif.sensor_noise = v;
        }
        if let Some(v) = self.vif_stabilizer {
            params.vif.stabilizer = v;
        }
        if let Some(raw) = &self.csf_weights {
            let parts: Vec<&str> = raw.split(',').collect();
            if parts.len() != DLM_LEVELS {
                return Err(AppError::Config(format!(
                    "--csf-weights needs {DLM_LEVELS} comma-separated values"
                )));
            }
            for (slot, part) in params.dlm.csf_weights.iter_mut().zip(parts) {
                *slot = part
                    .trim()
                    .parse()
                    .map_err(|_| AppError::Config(format!("bad CSF weight '{part}'")))?;
            }
        }
        Ok(params)
    }

    fn extract_options(&self) -> Result<ExtractOptions> {
        let mut opts = ExtractOptions::new(self.feature_params()?);
        opts.threads = self.threads;
        if let Some(dir) = &self.cache_dir {
            opts.cache = Some(FeatureCache::new(dir.clone())?);
        }
        Ok(opts)
    }
}

#[derive(Args, Debug, Clone)]
struct PoolingArgs {
    /// Temporal pooler: mean | hysteresis.
    #[arg(long)]
    pooling: Option<String>,
    /// Hysteresis memory window in seconds.
    #[arg(long)]
    tau_mem: Option<f64>,
    /// Hysteresis memory weight in [0, 1].
    #[arg(long)]
    alpha: Option<f64>,
    /// Do not clip predictions to the model's training score range.
    #[arg(long)]
    no_clip: bool,
}

impl PoolingArgs {
    fn merge(&mut self, cfg: &ConfigFile) -> Result<()> {
        cfg.merge(&mut self.pooling, "pooling")?;
        cfg.merge(&mut self.tau_mem, "tau-mem")?;
        cfg.merge(&mut self.alpha, "alpha")?;
        cfg.merge_flag(&mut self.no_clip, "no-clip")
    }

    fn pooling_config(&self) -> Result<PoolingConfig> {
        let mut config = PoolingConfig::default();
        if let Some(id) = &self.pooling {
            config.method = PoolingMethod::from_id(id).ok_or_else(|| {
                AppError::Config(format!("unknown pooling '{id}' (mean | hysteresis)"))
            })?;
        }
        let mut hysteresis = HysteresisParams::default();
        if let Some(tau) = self.tau_mem {
            hysteresis.memory_seconds = tau;
        }
        if let Some(alpha) = self.alpha {
            hysteresis.memory_weight = alpha;
        }
        config.hysteresis = hysteresis;
        Ok(config)
    }

    fn clip(&self) -> bool {
        !self.no_clip
    }
}

#[derive(Args, Debug)]
struct ExtractArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Manifest CSV; extracts every pair into --out-dir.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Column set: stvmaf | m1 | m2 | evmaf | all.
    #[arg(long, default_value = "all")]
    layout: String,
    /// Output CSV for a single pair (stdout when omitted).
    #[arg(long, short)]
    output: Option<PathBuf>,
    /// Output directory for manifest extraction.
    #[arg(long)]
    out_dir: Option<PathBuf>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug)]
struct TrainArgs {
    /// Manifest CSV with mos scores.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model layout: stvmaf | m1 | m2 | evmaf (trains M1 and M2).
    #[arg(long)]
    layout: Option<String>,
    /// Output model path; twice for evmaf (M1 then M2).
    #[arg(long = "model-out")]
    model_out: Vec<PathBuf>,
    /// SVR regularization C (default 0.5 for stvmaf, 4 otherwise).
    #[arg(long)]
    c: Option<f64>,
    /// RBF kernel width (default 0.04).
    #[arg(long)]
    gamma: Option<f64>,
    /// Epsilon tube half-width on the score scale (default 1).
    #[arg(long)]
    epsilon_svr: Option<f64>,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug)]
struct PredictArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Model file; twice for an ensemble (M1 then M2).
    #[arg(long = "model")]
    model: Vec<PathBuf>,
    /// Per-frame score CSV output.
    #[arg(long)]
    scores_out: Option<PathBuf>,
    #[command(flatten)]
    pooling: PoolingArgs,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug)]
struct EvaluateArgs {
    /// Manifest CSV with mos scores (optional `dataset` tag column).
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model file; twice for an ensemble.
    #[arg(long = "model")]
    model: Vec<PathBuf>,
    /// Machine-readable key-value report output.
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    pooling: PoolingArgs,
    #[command(flatten)]
    features: FeatureArgs,
}

#[derive(Args, Debug)]
struct MonotonicityArgs {
    /// Grid manifest with `res` and `crf` columns covering every cell.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Model file; twice for an ensemble.
    #[arg(long = "model")]
    model: Vec<PathBuf>,
    /// Plot-ready grid CSV output.
    #[arg(long)]
    grid_out: Option<PathBuf>,
    /// Audit report output (text).
    #[arg(long)]
    report_out: Option<PathBuf>,
    #[command(flatten)]
    pooling: PoolingArgs,
    #[command(flatten)]
    features: FeatureArgs,
}

/// Parses argv, runs the subcommand and returns the process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    match dispatch(cli) {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            let mut source = std::error::Error::source(&e);
            while let Some(cause) = source {
                eprintln!("  caused by: {cause}");
                source = cause.source();
            }
            e.exit_code()
        }
    }
}

fn dispatch(cli: Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(path) => ConfigFile::load(path)?,
        None => ConfigFile::default(),
    };
    match cli.command {
        Command::Extract(args) => cmd_extract(args, &cfg),
        Command::Train(args) => cmd_train(args, &cfg),
        Command::Predict(args) => cmd_predict(args, &cfg),
        Command::Evaluate(args) => cmd_evaluate(args, &cfg),
        Command::Monotonicity(args) => cmd_monotonicity(args, &cfg),
    }
}

/// Column subset written by `extract` for a layout id.
fn extract_columns(layout: &str) -> Result<Vec<&'static str>> {
    match layout {
        "all" => Ok(FEATURE_COLUMNS.to_vec()),
        // the ensemble consumes the union of both member layouts
        "evmaf" => Ok(vec![
            "vif0", "vif1", "vif2", "vif3", "dlm", "ti", "sspeed2", "sspeed3", "sspeed4",
            "tspeed2", "tspeed3", "tspeed4",
        ]),
        other => ModelLayout::from_id(other)
            .map(|l| l.feature_names().to_vec())
            .ok_or_else(|| {
                AppError::Config(format!(
                    "unknown layout '{other}' (stvmaf | m1 | m2 | evmaf | all)"
                ))
            }),
    }
}

fn provenance_header(params: &FeatureParams) -> String {
    format!(
        "# stevq features v{FEATURE_EXTRACTOR_VERSION} params {}\n",
        params.digest()
    )
}

fn cmd_extract(mut args: ExtractArgs, cfg: &ConfigFile) -> Result<()> {
    args.pair.merge(cfg)?;
    args.features.merge(cfg)?;
    cfg.merge(&mut args.manifest, "manifest")?;
    cfg.merge(&mut args.output, "output")?;
    cfg.merge(&mut args.out_dir, "out-dir")?;

    let columns = extract_columns(&args.layout)?;
    let opts = args.features.extract_options()?;
    let header = provenance_header(&opts.params);

    if let Some(manifest_path) = &args.manifest {
        let out_dir = args
            .out_dir
            .clone()
            .ok_or_else(|| AppError::Config("--out-dir is required with --manifest".into()))?;
        fs::create_dir_all(&out_dir).map_err(|e| AppError::io(&out_dir, e))?;
        let manifest = DatasetManifest::load(manifest_path)?;
        for (i, record) in manifest.records.iter().enumerate() {
            let (table, _, status) = extract_pair(
                &record.ref_path,
                &record.dist_path,
                record.raw_geometry(),
                &opts,
            )?;
            let name = format!("{:04}_{}.csv", i, sanitize(&record.content_id));
            let path = out_dir.join(name);
            write_with_header(&path, &header, &render_feature_csv(&table, &columns)?)?;
            log_cache(&record.dist_path, status);
        }
        return Ok(());
    }

    let (ref_path, dist_path) = args.pair.require_pair()?;
    let (table, _, status) = extract_pair(ref_path, dist_path, args.pair.geometry()?, &opts)?;
    log_cache(dist_path, status);
    let body = render_feature_csv(&table, &columns)?;
    match &args.output {
        Some(path) => write_with_header(path, &header, &body)?,
        None => print!("{header}{body}"),
    }
    Ok(())
}

fn log_cache(dist: &Path, status: CacheStatus) {
    if status == CacheStatus::Hit {
        eprintln!("cache hit: {} (frames not decoded)", dist.display());
    }
}

fn sanitize(id: &str) -> String {
    id.chars()
        .map(|c| if c.is_ascii_alphanumeric() { c } else { '_' })
        .collect()
}

fn write_with_header(path: &Path, header: &str, body: &str) -> Result<()> {
    fs::write(path, format!("{header}{body}")).map_err(|e| AppError::io(path, e))
}

fn cmd_train(mut args: TrainArgs, cfg: &ConfigFile) -> Result<()> {
    args.features.merge(cfg)?;
    cfg.merge(&mut args.manifest, "manifest")?;
    cfg.merge(&mut args.layout, "layout")?;
    cfg.merge_list(&mut args.model_out, "model-out")?;
    cfg.merge(&mut args.c, "c")?;
    cfg.merge(&mut args.gamma, "gamma")?;
    cfg.merge(&mut args.epsilon_svr, "epsilon-svr")?;

    let manifest_path = args
        .manifest
        .ok_or_else(|| AppError::Config("--manifest is required".into()))?;
    let layout_id = args
        .layout
        .ok_or_else(|| AppError::Config("--layout is required".into()))?;
    let selection = LayoutSelection::from_id(&layout_id).ok_or_else(|| {
        AppError::Config(format!(
            "unknown layout '{layout_id}' (stvmaf | m1 | m2 | evmaf)"
        ))
    })?;
    let expected = selection.layouts().len();
    if args.model_out.len() != expected {
        return Err(AppError::Config(format!(
            "layout {layout_id} needs exactly {expected} --model-out path(s), got {}",
            args.model_out.len()
        )));
    }

    let manifest = DatasetManifest::load(&manifest_path)?;
    let opts = args.features.extract_options()?;
    let overrides = TrainOverrides {
        c: args.c,
        gamma: args.gamma,
        epsilon: args.epsilon_svr,
    };
    let trained = train_models(&manifest, &manifest_path, selection, overrides, &opts)?;

    for ((model, diag), path) in trained.iter().zip(&args.model_out) {
        save_model(path, model)?;
        println!(
            "trained {}: n={} support_vectors={} iterations={} score_range=[{}, {}] -> {}",
            diag.layout.id(),
            diag.samples,
            diag.support_vectors,
            diag.solver_iterations,
            diag.score_range.0,
            diag.score_range.1,
            path.display()
        );
        for (name, lo, hi) in diag
            .layout
            .feature_names()
            .iter()
            .zip(&model.scaler.mins)
            .zip(&model.scaler.maxs)
            .map(|((n, lo), hi)| (n, lo, hi))
        {
            println!("  feature {name}: [{lo}, {hi}]");
        }
        for w in &diag.warnings {
            eprintln!("warning: {w}");
        }
    }
    Ok(())
}

fn load_predictor(paths: &[PathBuf]) -> Result<Predictor> {
    if paths.is_empty() {
        return Err(AppError::Config(
            "--model is required (give it twice for an ensemble)".into(),
        ));
    }
    let models = paths
        .iter()
        .map(|p| load_model(p))
        .collect::<Result<Vec<_>>>()?;
    Predictor::from_models(models)
}

fn cmd_predict(mut args: PredictArgs, cfg: &ConfigFile) -> Result<()> {
    args.pair.merge(cfg)?;
    args.features.merge(cfg)?;
    args.pooling.merge(cfg)?;
    cfg.merge_list(&mut args.model, "model")?;
    cfg.merge(&mut args.scores_out, "scores-out")?;

    let predictor = load_predictor(&args.model)?;
    let (ref_path, dist_path) = args.pair.require_pair()?;
    let opts = args.features.extract_options()?;
    let (table, fps, status) = extract_pair(ref_path, dist_path, args.pair.geometry()?, &opts)?;
    log_cache(dist_path, status);

    let scores = predictor.per_frame_scores(&table, args.pooling.clip())?;
    if let Some(path) = &args.scores_out {
        let mut body = String::from("frame,score\n");
        for (i, s) in scores.iter().enumerate() {
            body.push_str(&format!("{i},{s}\n"));
        }
        write_with_header(path, &provenance_header(&opts.params), &body)?;
    }
    let config = args.pooling.pooling_config()?;
    let pooled = crate::pipeline::pool_scores(scores, fps, &config)?;
    println!("pooling = {}", config.method.id());
    println!("pooled_score = {pooled}");
    Ok(())
}

fn cmd_evaluate(mut args: EvaluateArgs, cfg: &ConfigFile) -> Result<()> {
    args.features.merge(cfg)?;
    args.pooling.merge(cfg)?;
    cfg.merge(&mut args.manifest, "manifest")?;
    cfg.merge_list(&mut args.model, "model")?;
    cfg.merge(&mut args.report_out, "report-out")?;

    let manifest_path = args
        .manifest
        .ok_or_else(|| AppError::Config("--manifest is required".into()))?;
    let predictor = load_predictor(&args.model)?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    let opts = args.features.extract_options()?;
    let pooling = args.pooling.pooling_config()?;

    let report = evaluate_manifest(
        &manifest,
        &manifest_path,
        &predictor,
        &pooling,
        args.pooling.clip(),
        &opts,
    )?;
    print!("{}", report.render_table());
    if let Some(path) = &args.report_out {
        fs::write(path, report.render_kv()).map_err(|e| AppError::io(path, e))?;
    }
    Ok(())
}

fn cmd_monotonicity(mut args: MonotonicityArgs, cfg: &ConfigFile) -> Result<()> {
    args.features.merge(cfg)?;
    args.pooling.merge(cfg)?;
    cfg.merge(&mut args.manifest, "manifest")?;
    cfg.merge_list(&mut args.model, "model")?;
    cfg.merge(&mut args.grid_out, "grid-out")?;
    cfg.merge(&mut args.report_out, "report-out")?;

    let manifest_path = args
        .manifest
        .ok_or_else(|| AppError::Config("--manifest is required".into()))?;
    let predictor = load_predictor(&args.model)?;
    let manifest = DatasetManifest::load(&manifest_path)?;
    let opts = args.features.extract_options()?;
    let pooling = args.pooling.pooling_config()?;

    let (grid, violations) = monotonicity_grid(
        &manifest,
        &manifest_path,
        &predictor,
        &pooling,
        args.pooling.clip(),
        &opts,
    )?;
    let summary = render_violations(&grid, &violations);
    print!("{summary}");
    if let Some(path) = &args.grid_out {
        fs::write(path, render_grid_csv(&grid)).map_err(|e| AppError::io(path, e))?;
    }
    if let Some(path) = &args.report_out {
        fs::write(path, &summary).map_err(|e| AppError::io(path, e))?;
    }
    Ok(())
}

/// Writes the feature table of a frame pair; exposed for integration tests.
pub fn feature_table_csv(table: &FeatureTable) -> Result<String> {
    render_feature_csv(table, &FEATURE_COLUMNS)
}
