//! Entropic-differencing features on a Gaussian scale mixture model.
//!
//! A frame (or frame difference) is bandpassed by subtracting its local
//! Gaussian mean. Non-overlapping `b x b` blocks of the resulting map are
//! modeled as a Gaussian vector `U ~ N(0, K)` scaled by a positive mixing
//! variable `S`, observed through additive sensor noise of variance
//! `sigma_w^2`. Block entropies conditioned on the realized scale,
//!
//! `h = 1/2 ln[(2 pi e)^N  det(s^2 K + sigma_w^2 I)]`,
//!
//! are weighted by `ln(1 + s^2)` and the mean absolute difference of the
//! weighted fields between reference and distorted signals is the per-scale
//! feature. Applied to frames this yields S-SpEED, to frame differences
//! T-SpEED.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::filter::{convolve_reflect, Kernel1d};
use crate::linalg::{cholesky_log_det, SquareMatrix};
use crate::plane::dyadic_downsample;
use crate::{Error, Plane, Result};

/// Block side length for GSM statistics.
pub const DEFAULT_BLOCK_SIZE: usize = 5;
/// Sensor noise variance added to every block covariance.
pub const DEFAULT_NOISE_VARIANCE: f64 = 0.1;
/// Dyadic scales at which S-SpEED and T-SpEED features are extracted.
pub const SPEED_SCALES: [u32; 3] = [2, 3, 4];

const MEAN_FILTER_SIGMA: f64 = 7.0 / 6.0;
const MEAN_FILTER_SIZE: usize = 7;

/// ln(2 pi e) = ln(2 pi) + 1
const LN_TWO_PI_E: f64 = 2.837877066409345;

/// The 7x7 local-mean Gaussian (sigma 7/6), shared by all MS maps.
pub fn mean_kernel() -> Kernel1d {
    Kernel1d::gaussian(MEAN_FILTER_SIGMA, MEAN_FILTER_SIZE).expect("fixed valid parameters")
}

/// Smooths the plane with the 7x7 isotropic Gaussian of sigma 7/6.
///
/// Borders are symmetric-reflected, so planes smaller than the kernel are
/// still well defined; the deepest SpEED scale legitimately shrinks planes
/// to 5x5.
pub fn gaussian_filter(plane: &Plane) -> Plane {
    convolve_reflect(plane, &mean_kernel())
}

/// Local mean subtraction: `plane - gaussian_filter(plane)`.
pub fn ms_map(plane: &Plane) -> Plane {
    let smoothed = gaussian_filter(plane);
    let data = plane
        .data()
        .iter()
        .zip(smoothed.data())
        .map(|(p, s)| p - s)
        .collect();
    Plane::new(plane.width(), plane.height(), data).expect("dimensions preserved")
}

/// Grid of per-block scalars covering the full blocks of a map.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockGrid {
    cols: usize,
    rows: usize,
    values: Vec<f64>,
}

impl BlockGrid {
    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }
}

/// Per-block scale estimates `s^2 = c^T c / N` over non-overlapping `b x b`
/// blocks. The map is already locally zero-mean, so the mean square is the
/// GSM scale estimate. Trailing samples not covered by a full block are
/// dropped.
pub fn block_variances(map: &Plane, b: usize) -> Result<BlockGrid> {
    if b == 0 {
        return Err(Error::InvalidParameter(
            "block size must be positive".into(),
        ));
    }
    let cols = map.width() / b;
    let rows = map.height() / b;
    if cols == 0 || rows == 0 {
        return Err(Error::Scale(format!(
            "map {}x{} smaller than one {b}x{b} block",
            map.width(),
            map.height()
        )));
    }
    let n = (b * b) as f64;
    let mut values = Vec::with_capacity(cols * rows);
    for by in 0..rows {
        for bx in 0..cols {
            let mut sum_sq = 0.0;
            for y in 0..b {
                let row = map.row(by * b + y);
                for &v in &row[bx * b..bx * b + b] {
                    sum_sq += v * v;
                }
            }
            values.push(sum_sq / n);
        }
    }
    Ok(BlockGrid { cols, rows, values })
}

/// Estimates the `b^2 x b^2` covariance of the unit-variance GSM factor.
///
/// Every overlapping `b x b` patch (stride 1) is vectorized row-major; the
/// sample covariance of those vectors is divided by the mean non-overlapping
/// block variance, separating the mixing field from the coefficient
/// covariance (`E[C C^T] = E[S^2] K`). The result is symmetrized.
pub fn estimate_covariance(map: &Plane, b: usize) -> Result<SquareMatrix> {
    let n = b * b;
    let (w, h) = (map.width(), map.height());
    if w < b || h < b {
        return Err(Error::Scale(format!("map {w}x{h} has no {b}x{b} patches")));
    }
    let patches_x = w - b + 1;
    let patches_y = h - b + 1;
    let count = patches_x * patches_y;
    if count < n {
        return Err(Error::Scale(format!(
            "{count} overlapping patches cannot identify a {n}x{n} covariance"
        )));
    }

    let norm = block_variances(map, b)?.mean();
    if norm <= 0.0 {
        return Err(Error::DegenerateInput("all-zero map has no covariance"));
    }

    // accumulate sums and cross products over all patches
    let mut mean = Vec::new();
    mean.resize(n, 0.0f64);
    let mut cross = SquareMatrix::zeros(n);
    let mut patch = Vec::new();
    patch.resize(n, 0.0f64);
    for py in 0..patches_y {
        for px in 0..patches_x {
            for y in 0..b {
                let row = map.row(py + y);
                patch[y * b..y * b + b].copy_from_slice(&row[px..px + b]);
            }
            for (i, &vi) in patch.iter().enumerate() {
                mean[i] += vi;
                for (j, &vj) in patch.iter().enumerate().skip(i) {
                    cross.set(i, j, cross.get(i, j) + vi * vj);
                }
            }
        }
    }

    let m = count as f64;
    for v in &mut mean {
        *v /= m;
    }
    let mut cov = SquareMatrix::zeros(n);
    for i in 0..n {
        for j in i..n {
            let c = (cross.get(i, j) / m - mean[i] * mean[j]) / norm;
            cov.set(i, j, c);
            cov.set(j, i, c);
        }
    }
    Ok(cov)
}

/// Conditional entropy (nats) of a noisy GSM block with realized scale `s2`:
/// `1/2 [N ln(2 pi e) + ln det(s2 K + sigma_w^2 I)]`.
pub fn conditioned_entropy(s2: f64, k: &SquareMatrix, sigma_w2: f64) -> Result<f64> {
    if s2 < 0.0 || sigma_w2 <= 0.0 {
        return Err(Error::InvalidParameter(format!(
            "need s2 >= 0 and sigma_w2 > 0, got {s2} and {sigma_w2}"
        )));
    }
    if k.asymmetry() > 1e-9 {
        return Err(Error::InvalidParameter(
            "covariance is not symmetric".into(),
        ));
    }
    let n = k.size();
    let mut shifted = k.clone();
    for i in 0..n {
        for j in 0..n {
            let v = s2 * k.get(i, j) + if i == j { sigma_w2 } else { 0.0 };
            shifted.set(i, j, v);
        }
    }
    let log_det = cholesky_log_det(&shifted)?;
    Ok(0.5 * (n as f64 * LN_TWO_PI_E + log_det))
}

/// GSM block statistics of one MS map: the scale grid, the shared factor
/// covariance (absent for an all-zero map) and the model constants.
#[derive(Debug, Clone)]
pub struct BlockStats {
    pub block_variances: BlockGrid,
    /// `None` when the map is identically zero; every block then carries
    /// zero weight and the entropy field collapses to zeros.
    pub covariance: Option<SquareMatrix>,
    pub block_size: usize,
    pub noise_variance: f64,
}

impl BlockStats {
    pub fn compute(map: &Plane, block_size: usize, noise_variance: f64) -> Result<Self> {
        let block_variances = block_variances(map, block_size)?;
        let covariance = match estimate_covariance(map, block_size) {
            Ok(k) => Some(k),
            Err(Error::DegenerateInput(_)) => None,
            // Tiny planes (deepest scale of a small frame) can hold a full
            // block yet too few overlapping patches to identify K; the
            // identity is the model's null factor covariance and keeps the
            // entropies defined.
            Err(Error::Scale(_)) => Some(SquareMatrix::identity(block_size * block_size)),
            Err(e) => return Err(e),
        };
        Ok(Self {
            block_variances,
            covariance,
            block_size,
            noise_variance,
        })
    }
}

/// Per-block `h(C' | S = s) * ln(1 + s^2)` values.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedEntropyField {
    grid: BlockGrid,
}

impl WeightedEntropyField {
    #[inline]
    pub fn grid(&self) -> &BlockGrid {
        &self.grid
    }
}

/// Weights each block's conditional entropy by `ln(1 + s^2)`.
///
/// A degenerate (all-zero) map yields an all-zero field: every weight is
/// `ln 1 = 0` regardless of the pure-noise entropy.
pub fn weighted_entropy_field(stats: &BlockStats) -> Result<WeightedEntropyField> {
    let vars = &stats.block_variances;
    let mut values = Vec::with_capacity(vars.values().len());
    match &stats.covariance {
        None => values.resize(vars.values().len(), 0.0),
        Some(k) => {
            for &s2 in vars.values() {
                let h = conditioned_entropy(s2, k, stats.noise_variance)?;
                values.push(h * (1.0 + s2).ln());
            }
        }
    }
    Ok(WeightedEntropyField {
        grid: BlockGrid {
            cols: vars.cols(),
            rows: vars.rows(),
            values,
        },
    })
}

/// Entropic-differencing feature between two planes already at a common
/// scale: mean over blocks of the absolute weighted-entropy difference.
/// Reference and distorted each use their own estimated covariance.
pub fn speed_feature(
    reference: &Plane,
    distorted: &Plane,
    block_size: usize,
    noise_variance: f64,
) -> Result<f64> {
    if !reference.same_size(distorted) {
        return Err(Error::DimensionMismatch(format!(
            "speed feature needs matching planes, got {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            distorted.width(),
            distorted.height()
        )));
    }
    let ref_map = ms_map(reference);
    let dist_map = ms_map(distorted);
    let ref_stats = BlockStats::compute(&ref_map, block_size, noise_variance)?;
    let dist_stats = BlockStats::compute(&dist_map, block_size, noise_variance)?;
    let ref_field = weighted_entropy_field(&ref_stats)?;
    let dist_field = weighted_entropy_field(&dist_stats)?;

    let rv = ref_field.grid().values();
    let dv = dist_field.grid().values();
    // fixed row-major summation order keeps per-frame results reproducible
    let mut acc = 0.0;
    for (r, d) in rv.iter().zip(dv) {
        acc += (r - d).abs();
    }
    Ok(acc / rv.len() as f64)
}

/// S-SpEED: entropic differencing of the frames themselves at scales 2-4.
pub fn s_speed(
    ref_frame: &Plane,
    dist_frame: &Plane,
    block_size: usize,
    noise_variance: f64,
) -> Result<[f64; 3]> {
    speed_over_scales(ref_frame, dist_frame, block_size, noise_variance)
}

/// T-SpEED: entropic differencing of frame-difference planes at scales 2-4.
pub fn t_speed(
    ref_diff: &Plane,
    dist_diff: &Plane,
    block_size: usize,
    noise_variance: f64,
) -> Result<[f64; 3]> {
    speed_over_scales(ref_diff, dist_diff, block_size, noise_variance)
}

fn speed_over_scales(
    reference: &Plane,
    distorted: &Plane,
    block_size: usize,
    noise_variance: f64,
) -> Result<[f64; 3]> {
    let mut out = [0.0; 3];
    for (slot, &scale) in out.iter_mut().zip(SPEED_SCALES.iter()) {
        let r = dyadic_downsample(reference, scale)?;
        let d = dyadic_downsample(distorted, scale)?;
        *slot = speed_feature(&r, &d, block_size, noise_variance)?;
    }
    Ok(out)
}
