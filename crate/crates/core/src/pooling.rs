//! Temporal pooling of per-frame quality scores.
//!
//! Besides the arithmetic mean, a hysteresis pooler models two viewer
//! effects: memory of the recent worst quality (a running minimum over the
//! past window) and heightened sensitivity to poor upcoming quality (a
//! rank-ordered, half-Gaussian-weighted average of the future window where
//! the worst scores weigh most). Sums are anchored at an element of the
//! series so a constant series pools to exactly that constant.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Result};

/// Per-frame quality predictions plus the timebase they live on.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    scores: Vec<f64>,
    frame_rate: f64,
}

impl ScoreSeries {
    pub fn new(scores: Vec<f64>, frame_rate: f64) -> Result<Self> {
        if scores.is_empty() {
            return Err(Error::Empty("score series must be nonempty"));
        }
        if scores.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter(
                "score series must be finite".into(),
            ));
        }
        if !frame_rate.is_finite() || frame_rate <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "frame rate must be positive, got {frame_rate}"
            )));
        }
        Ok(Self { scores, frame_rate })
    }

    #[inline]
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    #[inline]
    pub fn frame_rate(&self) -> f64 {
        self.frame_rate
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// How per-frame predictions collapse into one score.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PoolingMethod {
    Mean,
    Hysteresis,
}

impl PoolingMethod {
    pub fn id(self) -> &'static str {
        match self {
            PoolingMethod::Mean => "mean",
            PoolingMethod::Hysteresis => "hysteresis",
        }
    }

    pub fn from_id(id: &str) -> Option<Self> {
        match id {
            "mean" => Some(PoolingMethod::Mean),
            "hysteresis" => Some(PoolingMethod::Hysteresis),
            _ => None,
        }
    }
}

/// Hysteresis pooling constants.
#[derive(Debug, Clone, PartialEq)]
pub struct HysteresisParams {
    /// Length of the memory and anticipation windows, in seconds.
    pub memory_seconds: f64,
    /// Weight of the memory term against the rank-weighted current term.
    pub memory_weight: f64,
}

impl Default for HysteresisParams {
    fn default() -> Self {
        Self {
            memory_seconds: 2.0,
            memory_weight: 0.8,
        }
    }
}

/// Anchored arithmetic mean of the series.
pub fn mean_pool(series: &ScoreSeries) -> Result<f64> {
    Ok(anchored_mean(series.scores()))
}

/// Pooled score plus the intermediate per-frame pooled series.
#[derive(Debug, Clone, PartialEq)]
pub struct PooledSeries {
    pub per_frame: Vec<f64>,
    pub score: f64,
}

/// Hysteresis pooling.
///
/// Per frame `t` with window `w = round(memory_seconds * fps)`:
/// the memory term is the minimum score over `[t-w, t-1]` (the first frame
/// keeps its own score); the current term sorts `[t, t+w-1]` worst-first
/// and averages with half-Gaussian weights of sigma `w/3`; the two combine
/// as `alpha * memory + (1 - alpha) * current`. The final score is the mean
/// of the per-frame pooled values.
pub fn hysteresis_pool(series: &ScoreSeries, params: &HysteresisParams) -> Result<PooledSeries> {
    if !params.memory_seconds.is_finite() || params.memory_seconds <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "memory window must be positive, got {} s",
            params.memory_seconds
        )));
    }
    if !(0.0..=1.0).contains(&params.memory_weight) {
        return Err(Error::InvalidParameter(format!(
            "memory weight must lie in [0, 1], got {}",
            params.memory_weight
        )));
    }
    let w = (params.memory_seconds * series.frame_rate()).round() as usize;
    if w < 1 {
        return Err(Error::InvalidParameter(format!(
            "window rounds to zero frames ({} s at {} fps)",
            params.memory_seconds,
            series.frame_rate()
        )));
    }

    let scores = series.scores();
    let n = scores.len();
    let alpha = params.memory_weight;
    let sigma = w as f64 / 3.0;
    // weights for the sorted current window, worst score first
    let weights: Vec<f64> = (0..w)
        .map(|j| (-((j * j) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();

    let mut sorted: Vec<f64> = Vec::with_capacity(w);
    let mut per_frame = Vec::with_capacity(n);
    for t in 0..n {
        let memory = if t == 0 {
            scores[0]
        } else {
            let lo = t.saturating_sub(w);
            scores[lo..t].iter().copied().fold(f64::INFINITY, f64::min)
        };

        let hi = (t + w).min(n);
        sorted.clear();
        sorted.extend_from_slice(&scores[t..hi]);
        sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite scores"));
        // anchored weighted mean: exact when the window is constant
        let worst = sorted[0];
        let mut wsum = 0.0;
        let mut acc = 0.0;
        for (v, wt) in sorted.iter().zip(&weights) {
            wsum += wt;
            acc += wt * (v - worst);
        }
        let current = worst + acc / wsum;

        per_frame.push(memory + (1.0 - alpha) * (current - memory));
    }

    let score = anchored_mean(&per_frame);
    Ok(PooledSeries { per_frame, score })
}

/// Mean computed as `x0 + mean(x - x0)`, exact on constant input.
fn anchored_mean(values: &[f64]) -> f64 {
    let anchor = values[0];
    let acc: f64 = values.iter().map(|v| v - anchor).sum();
    anchor + acc / values.len() as f64
}
