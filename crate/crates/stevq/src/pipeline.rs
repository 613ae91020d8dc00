//! End-to-end drivers: cached parallel feature extraction, model training
//! from manifests, per-frame prediction with pooling, dataset evaluation
//! and the compression/resolution monotonicity grid.

use std::collections::BTreeMap;
use std::path::Path;

use rayon::prelude::*;

use stevq_core::eval::{
    fisher_aggregate, logistic_fit, monotonicity_audit, plcc_rmse, srocc, ScoreGrid, Violation,
};
use stevq_core::features::{
    aggregate_for_training, assemble_features, frame_features, FeatureParams, FeatureTable,
    ModelLayout,
};
use stevq_core::pooling::{
    hysteresis_pool, mean_pool, HysteresisParams, PoolingMethod, ScoreSeries,
};
use stevq_core::svr::{svr_train, RegressionModel, SvrParams};
use stevq_core::Plane;

use crate::error::{AppError, Result};
use crate::features_io::FeatureCache;
use crate::manifest::{DatasetManifest, ManifestRecord};
use crate::report::{EvalReport, TagMetrics, TagReport};
use crate::video::{load_video, FrameSequence, RawGeometry};

/// Extraction settings shared by all subcommands.
pub struct ExtractOptions {
    pub params: FeatureParams,
    pub threads: Option<usize>,
    pub cache: Option<FeatureCache>,
}

impl ExtractOptions {
    pub fn new(params: FeatureParams) -> Self {
        Self {
            params,
            threads: None,
            cache: None,
        }
    }
}

/// Whether a table came from the cache or was computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CacheStatus {
    Disabled,
    Miss,
    Hit,
}

/// Per-frame feature extraction over a frame pair, parallel across frames.
/// Row order is fixed by frame index, so results are identical at any
/// thread count.
pub fn extract_table(
    ref_frames: &[Plane],
    dist_frames: &[Plane],
    params: &FeatureParams,
    threads: Option<usize>,
) -> Result<FeatureTable> {
    if ref_frames.len() != dist_frames.len() {
        return Err(AppError::Config(format!(
            "reference has {} frames but distorted has {}",
            ref_frames.len(),
            dist_frames.len()
        )));
    }
    if ref_frames.is_empty() {
        return Err(AppError::Config("no frames to extract".into()));
    }
    let run = || -> Result<Vec<[f64; 16]>> {
        (0..ref_frames.len())
            .into_par_iter()
            .map(|i| frame_features(ref_frames, dist_frames, i, params).map_err(AppError::from))
            .collect()
    };
    let rows = match threads {
        Some(t) => rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build()
            .map_err(|e| AppError::Config(format!("cannot build thread pool: {e}")))?
            .install(run),
        None => run(),
    }?;
    FeatureTable::from_rows(rows).map_err(AppError::from)
}

fn check_pair(ref_seq: &FrameSequence, dist_seq: &FrameSequence) -> Result<()> {
    if ref_seq.width() != dist_seq.width() || ref_seq.height() != dist_seq.height() {
        return Err(AppError::Config(format!(
            "dimension mismatch: reference {} is {}x{}, distorted {} is {}x{}",
            ref_seq.source_path,
            ref_seq.width(),
            ref_seq.height(),
            dist_seq.source_path,
            dist_seq.width(),
            dist_seq.height()
        )));
    }
    Ok(())
}

/// Loads a pair of videos and extracts (or recalls) its feature table.
pub fn extract_pair(
    ref_path: &Path,
    dist_path: &Path,
    geometry: Option<RawGeometry>,
    opts: &ExtractOptions,
) -> Result<(FeatureTable, f64, CacheStatus)> {
    if let Some(cache) = &opts.cache {
        let key = cache.key(ref_path, dist_path, &opts.params)?;
        if let Some(table) = cache.load(&key) {
            // frame rate still comes from the container metadata
            let fps = probe_frame_rate(ref_path, geometry)?;
            return Ok((table, fps, CacheStatus::Hit));
        }
        let (table, fps) = decode_and_extract(ref_path, dist_path, geometry, opts)?;
        cache.store(&key, &table)?;
        return Ok((table, fps, CacheStatus::Miss));
    }
    let (table, fps) = decode_and_extract(ref_path, dist_path, geometry, opts)?;
    Ok((table, fps, CacheStatus::Disabled))
}

fn decode_and_extract(
    ref_path: &Path,
    dist_path: &Path,
    geometry: Option<RawGeometry>,
    opts: &ExtractOptions,
) -> Result<(FeatureTable, f64)> {
    let ref_seq = load_video(ref_path, geometry)?;
    let dist_seq = load_video(dist_path, geometry)?;
    check_pair(&ref_seq, &dist_seq)?;
    let n = ref_seq.frames.len().min(dist_seq.frames.len());
    let table = extract_table(
        &ref_seq.frames[..n],
        &dist_seq.frames[..n],
        &opts.params,
        opts.threads,
    )?;
    Ok((table, ref_seq.frame_rate))
}

/// Reads just enough of the reference to recover its frame rate; no frame
/// payload is decoded on a cache hit.
fn probe_frame_rate(ref_path: &Path, geometry: Option<RawGeometry>) -> Result<f64> {
    let is_y4m = ref_path
        .extension()
        .map(|e| e.eq_ignore_ascii_case("y4m"))
        .unwrap_or(false);
    if is_y4m {
        crate::video::probe_y4m_frame_rate(ref_path)
    } else {
        geometry.map(|g| g.frame_rate).ok_or_else(|| {
            AppError::Config(format!(
                "headerless input {} requires an explicit frame rate",
                ref_path.display()
            ))
        })
    }
}

fn extract_record(
    record: &ManifestRecord,
    opts: &ExtractOptions,
) -> Result<(FeatureTable, f64, CacheStatus)> {
    extract_pair(
        &record.ref_path,
        &record.dist_path,
        record.raw_geometry(),
        opts,
    )
    .map_err(|e| annotate(e, record))
}

fn annotate(err: AppError, record: &ManifestRecord) -> AppError {
    match err {
        AppError::Config(msg) => AppError::Config(format!("[{}] {msg}", record.content_id)),
        other => other,
    }
}

/// Which model(s) a subcommand trains or loads.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayoutSelection {
    Single(ModelLayout),
    /// The two-model ensemble: M1 (vif/dlm/ti) and M2 (S-SpEED/T-SpEED).
    Ensemble,
}

impl LayoutSelection {
    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "evmaf" => Some(LayoutSelection::Ensemble),
            other => ModelLayout::from_id(other).map(LayoutSelection::Single),
        }
    }

    pub fn layouts(&self) -> Vec<ModelLayout> {
        match self {
            LayoutSelection::Single(layout) => vec![*layout],
            LayoutSelection::Ensemble => vec![ModelLayout::M1, ModelLayout::M2],
        }
    }
}

/// Optional CLI overrides of the per-layout solver defaults.
#[derive(Debug, Clone, Copy, Default)]
pub struct TrainOverrides {
    pub c: Option<f64>,
    pub gamma: Option<f64>,
    pub epsilon: Option<f64>,
}

impl TrainOverrides {
    fn apply(&self, mut params: SvrParams) -> SvrParams {
        if let Some(c) = self.c {
            params.c = c;
        }
        if let Some(gamma) = self.gamma {
            params.gamma = gamma;
        }
        if let Some(epsilon) = self.epsilon {
            params.epsilon = epsilon;
        }
        params
    }
}

/// Summary line per trained model, printed by the train subcommand.
pub struct TrainDiagnostics {
    pub layout: ModelLayout,
    pub samples: usize,
    pub support_vectors: usize,
    pub score_range: (f64, f64),
    pub solver_iterations: u64,
    pub warnings: Vec<String>,
}

/// Trains one model per selected layout on per-video averaged features.
pub fn train_models(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    selection: LayoutSelection,
    overrides: TrainOverrides,
    opts: &ExtractOptions,
) -> Result<Vec<(RegressionModel, TrainDiagnostics)>> {
    manifest.require_mos(manifest_path)?;
    let layouts = selection.layouts();
    let mut features: Vec<Vec<Vec<f64>>> = vec![Vec::new(); layouts.len()];
    let mut scores = Vec::new();
    for record in &manifest.records {
        let (table, _, _) = extract_record(record, opts)?;
        for (slot, &layout) in features.iter_mut().zip(&layouts) {
            let series = assemble_features(layout, &table);
            slot.push(aggregate_for_training(&series)?.values);
        }
        scores.push(record.mos.expect("checked by require_mos"));
    }

    let mut out = Vec::with_capacity(layouts.len());
    for (&layout, x) in layouts.iter().zip(features) {
        let params = overrides.apply(SvrParams::for_layout(layout));
        let model = svr_train(layout, &x, &scores, &params)?;
        let diagnostics = TrainDiagnostics {
            layout,
            samples: x.len(),
            support_vectors: model.support_vectors.len(),
            score_range: model.score_range,
            solver_iterations: model.solver_iterations,
            warnings: model.warnings.clone(),
        };
        out.push((model, diagnostics));
    }
    Ok(out)
}

/// A loaded predictor: one model, or the two-model prediction average.
pub enum Predictor {
    Single(RegressionModel),
    Ensemble(RegressionModel, RegressionModel),
}

impl Predictor {
    pub fn from_models(mut models: Vec<RegressionModel>) -> Result<Self> {
        match models.len() {
            1 => Ok(Predictor::Single(models.pop().expect("one model"))),
            2 => {
                let second = models.pop().expect("two models");
                let first = models.pop().expect("two models");
                if first.layout == second.layout {
                    return Err(AppError::Config(format!(
                        "ensemble needs two distinct layouts, got {} twice",
                        first.layout.id()
                    )));
                }
                Ok(Predictor::Ensemble(first, second))
            }
            n => Err(AppError::Config(format!("expected 1 or 2 models, got {n}"))),
        }
    }

    /// One prediction per frame; ensemble members are averaged per frame.
    pub fn per_frame_scores(&self, table: &FeatureTable, clip: bool) -> Result<Vec<f64>> {
        match self {
            Predictor::Single(model) => {
                let series = assemble_features(model.layout, table);
                series
                    .iter()
                    .map(|v| model.predict(v, clip).map_err(AppError::from))
                    .collect()
            }
            Predictor::Ensemble(m1, m2) => {
                let s1 = assemble_features(m1.layout, table);
                let s2 = assemble_features(m2.layout, table);
                s1.iter()
                    .zip(&s2)
                    .map(|(v1, v2)| {
                        stevq_core::svr::ensemble_predict(m1, m2, v1, v2, clip)
                            .map_err(AppError::from)
                    })
                    .collect()
            }
        }
    }
}

/// Pooler choice plus hysteresis constants.
#[derive(Debug, Clone)]
pub struct PoolingConfig {
    pub method: PoolingMethod,
    pub hysteresis: HysteresisParams,
}

impl Default for PoolingConfig {
    fn default() -> Self {
        Self {
            method: PoolingMethod::Hysteresis,
            hysteresis: HysteresisParams::default(),
        }
    }
}

pub fn pool_scores(scores: Vec<f64>, frame_rate: f64, config: &PoolingConfig) -> Result<f64> {
    let series = ScoreSeries::new(scores, frame_rate)?;
    match config.method {
        PoolingMethod::Mean => mean_pool(&series).map_err(AppError::from),
        PoolingMethod::Hysteresis => Ok(hysteresis_pool(&series, &config.hysteresis)?.score),
    }
}

/// Predicts the pooled score of one manifest record.
fn predict_record(
    record: &ManifestRecord,
    predictor: &Predictor,
    pooling: &PoolingConfig,
    clip: bool,
    opts: &ExtractOptions,
) -> Result<f64> {
    let (table, fps, _) = extract_record(record, opts)?;
    let scores = predictor.per_frame_scores(&table, clip)?;
    pool_scores(scores, fps, pooling)
}

/// Cross-dataset evaluation: per-tag SROCC / PLCC-after-logistic / RMSE,
/// Fisher-z aggregates across tags. Tag-level failures are recorded and do
/// not abort the remaining tags.
pub fn evaluate_manifest(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    predictor: &Predictor,
    pooling: &PoolingConfig,
    clip: bool,
    opts: &ExtractOptions,
) -> Result<EvalReport> {
    manifest.require_mos(manifest_path)?;
    let mut groups: BTreeMap<String, Vec<(f64, f64)>> = BTreeMap::new();
    for record in &manifest.records {
        let pred = predict_record(record, predictor, pooling, clip, opts)?;
        let tag = record
            .dataset
            .clone()
            .unwrap_or_else(|| "default".to_string());
        groups
            .entry(tag)
            .or_default()
            .push((pred, record.mos.expect("checked")));
    }

    let mut tags = Vec::new();
    let mut sroccs = Vec::new();
    let mut plccs = Vec::new();
    for (tag, pairs) in groups {
        let pred: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let mos: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        match tag_metrics(&pred, &mos) {
            Ok(metrics) => {
                sroccs.push(metrics.srocc);
                plccs.push(metrics.plcc);
                tags.push(TagReport {
                    tag,
                    n: pred.len(),
                    metrics: Some(metrics),
                    error: None,
                });
            }
            Err(e) => {
                tags.push(TagReport {
                    tag,
                    n: pred.len(),
                    metrics: None,
                    error: Some(e.to_string()),
                });
            }
        }
    }

    let (aggregate_srocc, aggregate_plcc, clamped) = if sroccs.is_empty() {
        (None, None, 0)
    } else {
        let s = fisher_aggregate(&sroccs)?;
        let p = fisher_aggregate(&plccs)?;
        (Some(s.value), Some(p.value), s.clamped + p.clamped)
    };
    Ok(EvalReport {
        tags,
        aggregate_srocc,
        aggregate_plcc,
        clamped,
    })
}

fn tag_metrics(pred: &[f64], mos: &[f64]) -> Result<TagMetrics> {
    let rank = srocc(pred, mos)?;
    let fit = logistic_fit(pred, mos)?;
    let (plcc, rmse) = plcc_rmse(&fit.mapped, mos)?;
    Ok(TagMetrics {
        srocc: rank,
        plcc,
        rmse,
        logistic: fit.params,
        linear_fallback: fit.fallback_linear,
    })
}

/// Predicts every (resolution, CRF) cell and audits monotonicity.
pub fn monotonicity_grid(
    manifest: &DatasetManifest,
    manifest_path: &Path,
    predictor: &Predictor,
    pooling: &PoolingConfig,
    clip: bool,
    opts: &ExtractOptions,
) -> Result<(ScoreGrid, Vec<Violation>)> {
    manifest.require_grid(manifest_path)?;

    let mut resolutions: Vec<String> = Vec::new();
    let mut crfs: Vec<String> = Vec::new();
    for r in &manifest.records {
        let res = r.res.clone().expect("checked by require_grid");
        let crf = r.crf.clone().expect("checked by require_grid");
        if !resolutions.contains(&res) {
            resolutions.push(res);
        }
        if !crfs.contains(&crf) {
            crfs.push(crf);
        }
    }
    sort_axis(&mut resolutions)?;
    sort_axis(&mut crfs)?;

    let mut cells: BTreeMap<(usize, usize), f64> = BTreeMap::new();
    for record in &manifest.records {
        let res_idx = resolutions
            .iter()
            .position(|r| Some(r) == record.res.as_ref())
            .unwrap();
        let crf_idx = crfs
            .iter()
            .position(|c| Some(c) == record.crf.as_ref())
            .unwrap();
        if cells.contains_key(&(res_idx, crf_idx)) {
            return Err(AppError::Config(format!(
                "duplicate grid cell (res {}, crf {})",
                resolutions[res_idx], crfs[crf_idx]
            )));
        }
        let pred = predict_record(record, predictor, pooling, clip, opts)?;
        cells.insert((res_idx, crf_idx), pred);
    }

    let mut missing = Vec::new();
    let mut scores = Vec::with_capacity(resolutions.len() * crfs.len());
    for (ri, res) in resolutions.iter().enumerate() {
        for (ci, crf) in crfs.iter().enumerate() {
            match cells.get(&(ri, ci)) {
                Some(&v) => scores.push(v),
                None => missing.push(format!("(res {res}, crf {crf})")),
            }
        }
    }
    if !missing.is_empty() {
        return Err(AppError::Config(format!(
            "incomplete grid; missing cells: {}",
            missing.join(", ")
        )));
    }

    let grid = ScoreGrid::new(resolutions, crfs, scores)?;
    let violations = monotonicity_audit(&grid);
    Ok((grid, violations))
}

/// Orders axis labels numerically; `WxH` labels sort by pixel count.
fn sort_axis(labels: &mut [String]) -> Result<()> {
    fn sort_key(label: &str) -> Option<f64> {
        if let Ok(v) = label.parse::<f64>() {
            return Some(v);
        }
        let (w, h) = label.split_once('x')?;
        Some(w.parse::<f64>().ok()? * h.parse::<f64>().ok()?)
    }
    let mut keyed = Vec::with_capacity(labels.len());
    for label in labels.iter() {
        let key = sort_key(label)
            .ok_or_else(|| AppError::Config(format!("cannot order grid axis label '{label}'")))?;
        keyed.push((key, label.clone()));
    }
    keyed.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite keys"));
    for (slot, (_, label)) in labels.iter_mut().zip(keyed) {
        *slot = label;
    }
    Ok(())
}
