//! Per-frame elementary features, model layouts and feature assembly.
//!
//! The canonical per-frame record holds sixteen columns:
//! `vif0..vif3, dlm, ti, tvif0..tvif3, sspeed2..sspeed4, tspeed2..tspeed4`.
//! Temporal columns (ti, tvif*, tspeed*) are undefined at frame 0 and are
//! padded with frame 1's value once a full series exists.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::dlm::{dlm, DlmParams};
use crate::gsm::{s_speed, t_speed, DEFAULT_BLOCK_SIZE, DEFAULT_NOISE_VARIANCE};
use crate::plane::frame_difference;
use crate::vif::{spatial_vif, t_vif, VifParams};
use crate::{Error, Plane, Result};

/// Canonical feature-column names, in CSV order.
pub const FEATURE_COLUMNS: [&str; 16] = [
    "vif0", "vif1", "vif2", "vif3", "dlm", "ti", "tvif0", "tvif1", "tvif2", "tvif3", "sspeed2",
    "sspeed3", "sspeed4", "tspeed2", "tspeed3", "tspeed4",
];

/// Canonical index of a feature column.
pub fn column_index(name: &str) -> Option<usize> {
    FEATURE_COLUMNS.iter().position(|c| *c == name)
}

const TI_INDEX: usize = 5;

/// Columns computed from frame differences: ti, tvif0-3, tspeed2-4. They
/// need head padding because frame 0 has no predecessor.
fn temporal_indices() -> impl Iterator<Item = usize> {
    [5usize, 6, 7, 8, 9, 13, 14, 15].into_iter()
}

/// Extraction constants; defaults mirror the deployed model constants.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureParams {
    pub block_size: usize,
    pub noise_variance: f64,
    pub vif: VifParams,
    pub dlm: DlmParams,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            block_size: DEFAULT_BLOCK_SIZE,
            noise_variance: DEFAULT_NOISE_VARIANCE,
            vif: VifParams::default(),
            dlm: DlmParams::default(),
        }
    }
}

impl FeatureParams {
    /// Stable textual digest of every constant that influences feature
    /// values; feature caches embed it in their keys.
    pub fn digest(&self) -> String {
        format!(
            "b={};sw2={};vs={};vn={};ve={};csf={},{},{},{};rf={}",
            self.block_size,
            self.noise_variance,
            self.vif.window_sigma,
            self.vif.sensor_noise,
            self.vif.stabilizer,
            self.dlm.csf_weights[0],
            self.dlm.csf_weights[1],
            self.dlm.csf_weights[2],
            self.dlm.csf_weights[3],
            self.dlm.ref_floor,
        )
    }
}

/// Temporal information: mean absolute luminance change between frames.
pub fn ti(curr_frame: &Plane, next_frame: &Plane) -> Result<f64> {
    if !curr_frame.same_size(next_frame) {
        return Err(Error::DimensionMismatch(format!(
            "ti needs matching planes, got {}x{} vs {}x{}",
            curr_frame.width(),
            curr_frame.height(),
            next_frame.width(),
            next_frame.height()
        )));
    }
    let n = curr_frame.data().len() as f64;
    let sum: f64 = curr_frame
        .data()
        .iter()
        .zip(next_frame.data())
        .map(|(c, x)| (x - c).abs())
        .sum();
    Ok(sum / n)
}

/// All sixteen columns for one frame pair; temporal slots are NaN at the
/// head frame until [`FeatureTable::pad_head`] runs.
pub fn frame_features(
    ref_frames: &[Plane],
    dist_frames: &[Plane],
    index: usize,
    params: &FeatureParams,
) -> Result<[f64; 16]> {
    let rf = &ref_frames[index];
    let df = &dist_frames[index];
    let mut row = [f64::NAN; 16];

    let vif = spatial_vif(rf, df, &params.vif)?;
    row[..4].copy_from_slice(&vif);
    row[4] = match dlm(rf, df, &params.dlm) {
        Ok(v) => v,
        Err(Error::DegenerateInput(_)) => 1.0,
        Err(e) => return Err(e),
    };
    let s = s_speed(rf, df, params.block_size, params.noise_variance)?;
    row[10..13].copy_from_slice(&s);

    if index > 0 {
        let ref_prev = &ref_frames[index - 1];
        let dist_prev = &dist_frames[index - 1];
        row[TI_INDEX] = ti(ref_prev, rf)?;
        let rd = frame_difference(rf, ref_prev)?;
        let dd = frame_difference(df, dist_prev)?;
        let tv = t_vif(&rd, &dd, &params.vif)?;
        row[6..10].copy_from_slice(&tv);
        let tsp = t_speed(&rd, &dd, params.block_size, params.noise_variance)?;
        row[13..16].copy_from_slice(&tsp);
    }
    Ok(row)
}

/// Per-frame feature rows for one (reference, distorted) pair.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureTable {
    rows: Vec<[f64; 16]>,
}

impl FeatureTable {
    /// Assembles a table from raw rows and pads the head frame's temporal
    /// columns with frame 1's values.
    pub fn from_rows(mut rows: Vec<[f64; 16]>) -> Result<Self> {
        if rows.is_empty() {
            return Err(Error::Empty("feature table needs at least one frame"));
        }
        pad_head(&mut rows);
        for (i, row) in rows.iter().enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Evaluation(format!(
                    "non-finite feature at frame {i}"
                )));
            }
        }
        Ok(Self { rows })
    }

    /// Sequential whole-pair extraction. Frame-level parallel drivers build
    /// the same rows independently and call [`FeatureTable::from_rows`].
    pub fn extract(
        ref_frames: &[Plane],
        dist_frames: &[Plane],
        params: &FeatureParams,
    ) -> Result<Self> {
        if ref_frames.len() != dist_frames.len() {
            return Err(Error::DimensionMismatch(format!(
                "reference has {} frames, distorted {}",
                ref_frames.len(),
                dist_frames.len()
            )));
        }
        if ref_frames.is_empty() {
            return Err(Error::Empty("no frames to extract"));
        }
        let mut rows = Vec::with_capacity(ref_frames.len());
        for i in 0..ref_frames.len() {
            rows.push(frame_features(ref_frames, dist_frames, i, params)?);
        }
        Self::from_rows(rows)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    #[inline]
    pub fn rows(&self) -> &[[f64; 16]] {
        &self.rows
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let idx = column_index(name)?;
        Some(self.rows.iter().map(|r| r[idx]).collect())
    }
}

fn pad_head(rows: &mut [[f64; 16]]) {
    if rows.len() >= 2 {
        let second = rows[1];
        for idx in temporal_indices() {
            rows[0][idx] = second[idx];
        }
    } else {
        // a single-frame clip has no temporal signal at all
        for idx in temporal_indices() {
            rows[0][idx] = match idx {
                TI_INDEX => 0.0,
                6..=9 => 1.0,
                _ => 0.0,
            };
        }
    }
}

/// Feature subsets consumed by the regression models.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ModelLayout {
    /// Twelve features: vif0-3, dlm, tspeed2-4, tvif0-3.
    StVmaf,
    /// Six features: vif0-3, dlm, ti.
    M1,
    /// Six features: sspeed2-4, tspeed2-4.
    M2,
}

impl ModelLayout {
    pub fn id(self) -> &'static str {
        match self {
            ModelLayout::StVmaf => "stvmaf",
            ModelLayout::M1 => "m1",
            ModelLayout::M2 => "m2",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "stvmaf" => Some(ModelLayout::StVmaf),
            "m1" => Some(ModelLayout::M1),
            "m2" => Some(ModelLayout::M2),
            _ => None,
        }
    }

    pub fn feature_names(self) -> &'static [&'static str] {
        match self {
            ModelLayout::StVmaf => &[
                "vif0", "vif1", "vif2", "vif3", "dlm", "tspeed2", "tspeed3", "tspeed4", "tvif0",
                "tvif1", "tvif2", "tvif3",
            ],
            ModelLayout::M1 => &["vif0", "vif1", "vif2", "vif3", "dlm", "ti"],
            ModelLayout::M2 => &[
                "sspeed2", "sspeed3", "sspeed4", "tspeed2", "tspeed3", "tspeed4",
            ],
        }
    }

    pub fn dimension(self) -> usize {
        self.feature_names().len()
    }

    fn column_indices(self) -> Vec<usize> {
        self.feature_names()
            .iter()
            .map(|n| column_index(n).expect("layout names are canonical"))
            .collect()
    }
}

/// One frame's features in a model's layout order.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector {
    pub layout: ModelLayout,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(layout: ModelLayout, values: Vec<f64>) -> Result<Self> {
        if values.len() != layout.dimension() {
            return Err(Error::DimensionMismatch(format!(
                "layout {} expects {} features, got {}",
                layout.id(),
                layout.dimension(),
                values.len()
            )));
        }
        Ok(Self { layout, values })
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        let idx = self
            .layout
            .feature_names()
            .iter()
            .position(|n| *n == name)?;
        Some(self.values[idx])
    }
}

/// Projects the canonical table onto a model layout, one vector per frame.
pub fn assemble_features(layout: ModelLayout, table: &FeatureTable) -> Vec<FeatureVector> {
    let indices = layout.column_indices();
    table
        .rows()
        .iter()
        .map(|row| FeatureVector {
            layout,
            values: indices.iter().map(|&i| row[i]).collect(),
        })
        .collect()
}

/// Arithmetic mean per feature over all frames: the training-time aggregate.
pub fn aggregate_for_training(series: &[FeatureVector]) -> Result<FeatureVector> {
    let first = series
        .first()
        .ok_or(Error::Empty("cannot aggregate an empty series"))?;
    let layout = first.layout;
    let dim = layout.dimension();
    let mut sums = Vec::new();
    sums.resize(dim, 0.0f64);
    for v in series {
        if v.layout != layout {
            return Err(Error::DimensionMismatch(
                "mixed layouts in feature series".into(),
            ));
        }
        for (s, x) in sums.iter_mut().zip(&v.values) {
            *s += x;
        }
    }
    let n = series.len() as f64;
    for s in &mut sums {
        *s /= n;
    }
    Ok(FeatureVector {
        layout,
        values: sums,
    })
}
