//! Visual information fidelity over a Gaussian-smoothed dyadic pyramid.
//!
//! A pixel-domain VIF: local Gaussian-windowed moments give a per-pixel
//! gain/residual decomposition of the distorted signal against the
//! reference, and the feature is the ratio of the information the distorted
//! channel retains to the information the reference carries. Computed on
//! frames it is the VIF feature family; on frame differences it is T-VIF.

use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::filter::{convolve_reflect, convolve_valid, decimate2, Kernel1d};
use crate::{Error, Plane, Result};

/// Number of pyramid scales for both VIF and T-VIF.
pub const VIF_SCALES: usize = 4;

/// Parameters of the VIF moment windows and information ratio.
#[derive(Debug, Clone, PartialEq)]
pub struct VifParams {
    /// Window standard deviation at scale 0; halves at each coarser scale.
    pub window_sigma: f64,
    /// Sensor noise variance in the information terms.
    pub sensor_noise: f64,
    /// Stabilizer added to the reference variance in the gain denominator.
    pub stabilizer: f64,
}

impl Default for VifParams {
    fn default() -> Self {
        Self {
            window_sigma: 2.0,
            sensor_noise: 2.0,
            stabilizer: 1e-10,
        }
    }
}

impl VifParams {
    pub fn window_for_scale(&self, scale: usize) -> Result<Kernel1d> {
        let sigma = self.window_sigma / (1u32 << scale) as f64;
        Kernel1d::gaussian_auto(sigma)
    }
}

/// Single-scale VIF between two planes with the given moment window.
///
/// Returns [`Error::DegenerateInput`] when the reference is flat everywhere
/// (zero information); callers conventionally substitute 1.0.
pub fn vif_scale(
    reference: &Plane,
    distorted: &Plane,
    window: &Kernel1d,
    params: &VifParams,
) -> Result<f64> {
    if !reference.same_size(distorted) {
        return Err(Error::DimensionMismatch(alloc::format!(
            "vif needs matching planes, got {}x{} vs {}x{}",
            reference.width(),
            reference.height(),
            distorted.width(),
            distorted.height()
        )));
    }

    let mu_x = convolve_valid(reference, window)?;
    let mu_y = convolve_valid(distorted, window)?;
    let xx = convolve_valid(&product(reference, reference), window)?;
    let yy = convolve_valid(&product(distorted, distorted), window)?;
    let xy = convolve_valid(&product(reference, distorted), window)?;

    let mut num = 0.0;
    let mut den = 0.0;
    for i in 0..mu_x.data().len() {
        let mx = mu_x.data()[i];
        let my = mu_y.data()[i];
        let sigma_x2 = (xx.data()[i] - mx * mx).max(0.0);
        let sigma_y2 = (yy.data()[i] - my * my).max(0.0);
        let sigma_xy = xy.data()[i] - mx * my;

        // the channel model is attenuation plus noise: gains outside [0, 1]
        // are sample-moment noise (small windows at coarse scales) and would
        // let the retained information exceed the reference information
        let g = (sigma_xy / (sigma_x2 + params.stabilizer)).clamp(0.0, 1.0);
        let sigma_v2 = (sigma_y2 - g * sigma_xy).max(0.0);

        num += (1.0 + g * g * sigma_x2 / (sigma_v2 + params.sensor_noise)).ln();
        den += (1.0 + sigma_x2 / params.sensor_noise).ln();
    }
    if den == 0.0 {
        return Err(Error::DegenerateInput(
            "flat reference carries no information",
        ));
    }
    Ok(num / den)
}

/// VIF at scales 0-3 of the smooth-then-decimate pyramid of two frames.
/// Degenerate scales (flat reference) map to 1.0.
pub fn spatial_vif(
    ref_frame: &Plane,
    dist_frame: &Plane,
    params: &VifParams,
) -> Result<[f64; VIF_SCALES]> {
    vif_pyramid(ref_frame, dist_frame, params)
}

/// VIF of frame-difference planes at scales 0-3. A static reference scene
/// (all-zero difference) is degenerate and maps to 1.0 at every scale.
pub fn t_vif(ref_diff: &Plane, dist_diff: &Plane, params: &VifParams) -> Result<[f64; VIF_SCALES]> {
    vif_pyramid(ref_diff, dist_diff, params)
}

fn vif_pyramid(
    reference: &Plane,
    distorted: &Plane,
    params: &VifParams,
) -> Result<[f64; VIF_SCALES]> {
    let mut r = reference.clone();
    let mut d = distorted.clone();
    let mut out = [1.0; VIF_SCALES];
    for (scale, slot) in out.iter_mut().enumerate() {
        let window = params.window_for_scale(scale)?;
        if scale > 0 {
            r = decimate2(&convolve_reflect(&r, &window));
            d = decimate2(&convolve_reflect(&d, &window));
        }
        *slot = match vif_scale(&r, &d, &window, params) {
            Ok(v) => v,
            Err(Error::DegenerateInput(_)) => 1.0,
            Err(e) => return Err(e),
        };
    }
    Ok(out)
}

fn product(a: &Plane, b: &Plane) -> Plane {
    let data: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| x * y).collect();
    Plane::new(a.width(), a.height(), data).expect("same dimensions")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn textured(w: usize, h: usize, seed: u64) -> Plane {
        let mut state = seed | 1;
        Plane::from_fn(w, h, |x, y| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let noise = (state >> 40) as f64 / 65536.0;
            120.0
                + 50.0 * ((x as f64) * 0.17).sin()
                + 30.0 * ((y as f64) * 0.23).cos()
                + noise * 25.0
        })
    }

    #[test]
    fn identical_planes_score_one() {
        let p = textured(64, 64, 5);
        let w = VifParams::default().window_for_scale(0).unwrap();
        let v = vif_scale(&p, &p, &w, &VifParams::default()).unwrap();
        assert!((v - 1.0).abs() < 1e-6, "{v}");
    }

    #[test]
    fn flat_distorted_scores_near_zero() {
        let p = textured(64, 64, 5);
        let flat = Plane::filled(64, 64, 128.0);
        let w = VifParams::default().window_for_scale(0).unwrap();
        let v = vif_scale(&p, &flat, &w, &VifParams::default()).unwrap();
        assert!(v < 0.05, "{v}");
    }

    #[test]
    fn flat_reference_is_degenerate() {
        let flat = Plane::filled(32, 32, 10.0);
        let p = textured(32, 32, 5);
        let w = VifParams::default().window_for_scale(0).unwrap();
        assert!(matches!(
            vif_scale(&flat, &p, &w, &VifParams::default()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn dc_offset_leaves_vif_unchanged() {
        let r = textured(64, 64, 5);
        let d = textured(64, 64, 6);
        let w = VifParams::default().window_for_scale(0).unwrap();
        let a = vif_scale(&r, &d, &w, &VifParams::default()).unwrap();
        let b = vif_scale(&r.offset(31.0), &d.offset(31.0), &w, &VifParams::default()).unwrap();
        assert!((a - b).abs() < 1e-8);
    }

    #[test]
    fn identical_frames_give_unit_vector() {
        let p = textured(80, 80, 9);
        let v = spatial_vif(&p, &p, &VifParams::default()).unwrap();
        for s in v {
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn minimum_eighty_pixel_input_is_valid() {
        let r = textured(80, 80, 9);
        let d = textured(80, 80, 10);
        let v = spatial_vif(&r, &d, &VifParams::default()).unwrap();
        assert!(v.iter().all(|x| x.is_finite()));
    }

    #[test]
    fn blur_hurts_fine_scales_most() {
        let r = textured(96, 96, 13);
        // heavy blur removes fine detail first
        let blur = Kernel1d::gaussian(2.5, 13).unwrap();
        let d = convolve_reflect(&r, &blur);
        let v = spatial_vif(&r, &d, &VifParams::default()).unwrap();
        assert!(v[3] > v[0], "coarse scale should survive blur: {v:?}");
        assert!(v[0] < 0.7);
    }

    #[test]
    fn static_scene_tvif_is_unit() {
        let zero = Plane::filled(80, 80, 0.0);
        let v = t_vif(&zero, &zero, &VifParams::default()).unwrap();
        assert_eq!(v, [1.0; 4]);
    }

    #[test]
    fn dropped_frames_score_near_zero() {
        // reference moves, distorted froze: distorted difference is zero
        let ref_diff = textured(80, 80, 21).offset(-120.0);
        let dist_diff = Plane::filled(80, 80, 0.0);
        let v = t_vif(&ref_diff, &dist_diff, &VifParams::default()).unwrap();
        for s in v {
            assert!(s < 0.1, "{v:?}");
        }
    }
}
