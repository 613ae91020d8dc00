//! Detail loss measure on a separable Daubechies-2 decomposition.
//!
//! Both frames are decomposed into four wavelet levels. In every detail
//! subband the distorted coefficient is decoupled into a restored part
//! `R = clamp(dist/ref, 0, 1) * ref` (gain clamping discards sign flips and
//! amplification, so purely additive impairments drop out) and the measure
//! is the ratio of CSF-weighted cube norms of restored to reference detail,
//! accumulated over levels with border coefficients cropped.

use alloc::format;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Plane, Result};

/// Decomposition depth.
pub const DLM_LEVELS: usize = 4;

/// Per-level weights and decoupling guard.
#[derive(Debug, Clone, PartialEq)]
pub struct DlmParams {
    /// Contrast-sensitivity weight per decomposition level (fine to coarse).
    pub csf_weights: [f64; DLM_LEVELS],
    /// Reference coefficients below this magnitude contribute no restored
    /// energy (the distorted value is treated as fully additive).
    pub ref_floor: f64,
}

impl Default for DlmParams {
    fn default() -> Self {
        Self {
            csf_weights: [1.0; DLM_LEVELS],
            ref_floor: 1e-12,
        }
    }
}

// Daubechies-2 analysis taps.
const SQRT3: f64 = 1.732050807568877;
const DB2_LOW: [f64; 4] = [
    (1.0 + SQRT3) / 5.656854249492381,
    (3.0 + SQRT3) / 5.656854249492381,
    (3.0 - SQRT3) / 5.656854249492381,
    (1.0 - SQRT3) / 5.656854249492381,
];

fn db2_high() -> [f64; 4] {
    [DB2_LOW[3], -DB2_LOW[2], DB2_LOW[1], -DB2_LOW[0]]
}

/// One 2-D analysis level: approximation plus (LH, HL, HH) detail subbands,
/// each of dimensions `ceil(n/2)` with symmetric extension.
pub struct WaveletLevel {
    pub approx: Plane,
    pub detail_h: Plane,
    pub detail_v: Plane,
    pub detail_d: Plane,
}

fn analyze_rows(plane: &Plane) -> (Plane, Plane) {
    let (w, h) = (plane.width(), plane.height());
    let ow = w.div_ceil(2);
    let high = db2_high();
    let mut low_data = Vec::with_capacity(ow * h);
    let mut high_data = Vec::with_capacity(ow * h);
    for y in 0..h {
        let row = plane.row(y);
        for k in 0..ow {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for t in 0..4 {
                let idx = reflect(2 * k as isize + t as isize - 1, w);
                let v = row[idx];
                lo += DB2_LOW[t] * v;
                hi += high[t] * v;
            }
            low_data.push(lo);
            high_data.push(hi);
        }
    }
    (
        Plane::new(ow, h, low_data).expect("half width"),
        Plane::new(ow, h, high_data).expect("half width"),
    )
}

fn analyze_cols(plane: &Plane) -> (Plane, Plane) {
    let (w, h) = (plane.width(), plane.height());
    let oh = h.div_ceil(2);
    let high = db2_high();
    let mut low_data = Vec::with_capacity(w * oh);
    let mut high_data = Vec::with_capacity(w * oh);
    for k in 0..oh {
        let mut lo_row = Vec::with_capacity(w);
        let mut hi_row = Vec::with_capacity(w);
        for x in 0..w {
            let mut lo = 0.0;
            let mut hi = 0.0;
            for t in 0..4 {
                let idx = reflect(2 * k as isize + t as isize - 1, h);
                let v = plane.get(x, idx);
                lo += DB2_LOW[t] * v;
                hi += high[t] * v;
            }
            lo_row.push(lo);
            hi_row.push(hi);
        }
        low_data.extend_from_slice(&lo_row);
        high_data.extend_from_slice(&hi_row);
    }
    (
        Plane::new(w, oh, low_data).expect("half height"),
        Plane::new(w, oh, high_data).expect("half height"),
    )
}

#[inline]
fn reflect(i: isize, n: usize) -> usize {
    let n = n as isize;
    let period = 2 * n;
    let mut i = i % period;
    if i < 0 {
        i += period;
    }
    if i >= n {
        i = period - 1 - i;
    }
    i as usize
}

/// Single separable analysis step.
pub fn dwt2(plane: &Plane) -> WaveletLevel {
    let (low, high) = analyze_rows(plane);
    let (ll, lh) = analyze_cols(&low);
    let (hl, hh) = analyze_cols(&high);
    WaveletLevel {
        approx: ll,
        detail_h: hl,
        detail_v: lh,
        detail_d: hh,
    }
}

/// Border crop in subband samples at the given level (1-based). A border
/// artifact spans roughly one filter length at full resolution, which
/// halves with each decimation; at least one coefficient per dimension is
/// always kept.
fn crop_margin(level: usize, dim: usize) -> usize {
    let nominal = (4usize).div_ceil(1 << level);
    nominal.min(dim.saturating_sub(1) / 2)
}

/// Detail loss measure between a reference and a distorted frame.
///
/// Returns [`Error::DegenerateInput`] when the reference has no detail
/// energy at all (flat frame); callers conventionally substitute 1.0.
pub fn dlm(ref_frame: &Plane, dist_frame: &Plane, params: &DlmParams) -> Result<f64> {
    if !ref_frame.same_size(dist_frame) {
        return Err(Error::DimensionMismatch(format!(
            "dlm needs matching planes, got {}x{} vs {}x{}",
            ref_frame.width(),
            ref_frame.height(),
            dist_frame.width(),
            dist_frame.height()
        )));
    }
    if ref_frame.width() < 16 || ref_frame.height() < 16 {
        return Err(Error::Scale(format!(
            "dlm needs at least 16x16 for {DLM_LEVELS} wavelet levels, got {}x{}",
            ref_frame.width(),
            ref_frame.height()
        )));
    }

    let mut ref_level = ref_frame.clone();
    let mut dist_level = dist_frame.clone();
    let mut numerator = 0.0;
    let mut denominator = 0.0;

    for level in 1..=DLM_LEVELS {
        let r = dwt2(&ref_level);
        let d = dwt2(&dist_level);

        let mut restored_cubes = 0.0;
        let mut reference_cubes = 0.0;
        for (rs, ds) in [
            (&r.detail_h, &d.detail_h),
            (&r.detail_v, &d.detail_v),
            (&r.detail_d, &d.detail_d),
        ] {
            let mx = crop_margin(level, rs.width());
            let my = crop_margin(level, rs.height());
            for y in my..rs.height() - my {
                for x in mx..rs.width() - mx {
                    let rc = rs.get(x, y);
                    let dc = ds.get(x, y);
                    let restored = if rc.abs() <= params.ref_floor {
                        0.0
                    } else {
                        (dc / rc).clamp(0.0, 1.0) * rc
                    };
                    restored_cubes += restored.abs().powi(3);
                    reference_cubes += rc.abs().powi(3);
                }
            }
        }
        let w = params.csf_weights[level - 1];
        numerator += w * restored_cubes.powf(1.0 / 3.0);
        denominator += w * reference_cubes.powf(1.0 / 3.0);

        ref_level = r.approx;
        dist_level = d.approx;
    }

    // flat frames leave only rounding residue in the detail bands
    if denominator <= 1e-9 {
        return Err(Error::DegenerateInput("reference has no detail energy"));
    }
    Ok(numerator / denominator)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filter::{convolve_reflect, Kernel1d};

    fn textured(w: usize, h: usize, seed: u64) -> Plane {
        let mut state = seed | 1;
        Plane::from_fn(w, h, |x, y| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let noise = (state >> 40) as f64 / 65536.0;
            128.0 + 45.0 * ((x as f64) * 0.31).sin() * ((y as f64) * 0.19).cos() + noise * 20.0
        })
    }

    #[test]
    fn analysis_halves_dimensions() {
        let p = textured(33, 21, 4);
        let lvl = dwt2(&p);
        assert_eq!((lvl.approx.width(), lvl.approx.height()), (17, 11));
        assert_eq!((lvl.detail_d.width(), lvl.detail_d.height()), (17, 11));
    }

    #[test]
    fn constant_input_has_no_detail() {
        let p = Plane::filled(32, 32, 55.0);
        let lvl = dwt2(&p);
        for sb in [&lvl.detail_h, &lvl.detail_v, &lvl.detail_d] {
            for &v in sb.data() {
                assert!(v.abs() < 1e-9);
            }
        }
        // approximation keeps the DC at the 2-D analysis gain of 2
        for &v in lvl.approx.data() {
            assert!((v - 110.0).abs() < 1e-9);
        }
    }

    #[test]
    fn identical_frames_give_unit_dlm() {
        let p = textured(64, 64, 8);
        let v = dlm(&p, &p, &DlmParams::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn blur_loses_detail() {
        let p = textured(96, 96, 8);
        let blur = Kernel1d::gaussian(3.0, 19).unwrap();
        let d = convolve_reflect(&p, &blur);
        let v = dlm(&p, &d, &DlmParams::default()).unwrap();
        assert!(v < 0.75, "blurred distortion must lose detail: {v}");
    }

    #[test]
    fn additive_noise_is_mostly_decoupled() {
        let p = textured(96, 96, 8);
        let mut state = 77u64;
        let noisy = Plane::from_fn(96, 96, |x, y| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let n = ((state >> 40) as f64 / 16777216.0 - 0.5) * 10.0;
            p.get(x, y) + n
        });
        let v_noise = dlm(&p, &noisy, &DlmParams::default()).unwrap();
        let blur = Kernel1d::gaussian(3.0, 19).unwrap();
        let v_blur = dlm(&p, &convolve_reflect(&p, &blur), &DlmParams::default()).unwrap();
        assert!(
            v_noise > 0.9,
            "additive impairment should decouple away: {v_noise}"
        );
        assert!(v_noise > v_blur);
    }

    #[test]
    fn sign_flip_of_both_inputs_is_invariant() {
        let r = textured(64, 64, 3);
        let d = textured(64, 64, 5);
        let a = dlm(&r, &d, &DlmParams::default()).unwrap();
        let b = dlm(&r.scale(-1.0), &d.scale(-1.0), &DlmParams::default()).unwrap();
        assert!((a - b).abs() < 1e-12);
    }

    #[test]
    fn small_frames_are_rejected() {
        let p = textured(15, 32, 1);
        assert!(matches!(
            dlm(&p, &p, &DlmParams::default()),
            Err(Error::Scale(_))
        ));
    }

    #[test]
    fn flat_reference_is_degenerate() {
        let flat = Plane::filled(32, 32, 7.0);
        let d = textured(32, 32, 2);
        assert!(matches!(
            dlm(&flat, &d, &DlmParams::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn sixteen_pixel_minimum_works() {
        let r = textured(16, 16, 6);
        let d = textured(16, 16, 7);
        assert!(dlm(&r, &d, &DlmParams::default()).unwrap().is_finite());
    }
}
