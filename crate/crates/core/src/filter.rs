//! Separable Gaussian filtering.
//!
//! All smoothing in the engine uses sampled isotropic Gaussians, which
//! factor exactly into an outer product of one-dimensional kernels. Two
//! border policies are provided: symmetric reflection (keeps dimensions,
//! used for bandpass maps) and valid-only (shrinks by the kernel radius,
//! used for windowed moments where border statistics would bias ratios).

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

#[cfg(not(feature = "std"))]
use num_traits::Float;

use crate::{Error, Plane, Result};

/// A normalized, odd-length, symmetric 1-D convolution kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel1d {
    weights: Vec<f64>,
}

impl Kernel1d {
    /// Samples `exp(-x^2 / (2 sigma^2))` on `-radius..=radius` and normalizes
    /// the taps to sum to one.
    pub fn gaussian(sigma: f64, size: usize) -> Result<Self> {
        if sigma <= 0.0 || size == 0 || size.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "gaussian kernel needs sigma > 0 and odd size, got sigma={sigma} size={size}"
            )));
        }
        let radius = (size / 2) as isize;
        let mut weights = Vec::with_capacity(size);
        for x in -radius..=radius {
            let x = x as f64;
            weights.push((-x * x / (2.0 * sigma * sigma)).exp());
        }
        let sum: f64 = weights.iter().sum();
        for w in &mut weights {
            *w /= sum;
        }
        Ok(Self { weights })
    }

    /// Gaussian kernel with the conventional support `2 ceil(3 sigma) + 1`.
    pub fn gaussian_auto(sigma: f64) -> Result<Self> {
        let radius = (3.0 * sigma).ceil().max(1.0) as usize;
        Self::gaussian(sigma, 2 * radius + 1)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    #[inline]
    pub fn radius(&self) -> usize {
        self.weights.len() / 2
    }

    #[inline]
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }
}

/// Folds an out-of-range index back into `0..n` by symmetric reflection
/// (`a b c d | d c b a | a b c d ...`), handling any overhang.
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

/// 2-D convolution with a separable kernel, borders handled by symmetric
/// reflection. Output has the same dimensions as the input.
pub fn convolve_reflect(plane: &Plane, kernel: &Kernel1d) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    let r = kernel.radius() as isize;
    let taps = kernel.weights();

    // horizontal pass
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        let row = plane.row(y);
        for x in 0..w {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                let sx = reflect(x as isize + t as isize - r, w);
                acc += k * row[sx];
            }
            tmp[y * w + x] = acc;
        }
    }

    // vertical pass
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        for (t, &k) in taps.iter().enumerate() {
            let sy = reflect(y as isize + t as isize - r, h);
            let src = &tmp[sy * w..(sy + 1) * w];
            let dst = &mut out[y * w..(y + 1) * w];
            for x in 0..w {
                dst[x] += k * src[x];
            }
        }
    }
    Plane::new(w, h, out).expect("same dimensions as input")
}

/// 2-D convolution keeping only fully covered output samples. The result
/// shrinks by the kernel radius on every side.
pub fn convolve_valid(plane: &Plane, kernel: &Kernel1d) -> Result<Plane> {
    let (w, h) = (plane.width(), plane.height());
    let size = kernel.len();
    let r = kernel.radius();
    if w < size || h < size {
        return Err(Error::Scale(format!(
            "plane {w}x{h} smaller than {size}x{size} window"
        )));
    }
    let taps = kernel.weights();
    let ow = w - 2 * r;
    let oh = h - 2 * r;

    // horizontal pass: full rows, valid columns
    let mut tmp = vec![0.0f64; ow * h];
    for y in 0..h {
        let row = plane.row(y);
        for x in 0..ow {
            let mut acc = 0.0;
            for (t, &k) in taps.iter().enumerate() {
                acc += k * row[x + t];
            }
            tmp[y * ow + x] = acc;
        }
    }

    // vertical pass: valid rows
    let mut out = vec![0.0f64; ow * oh];
    for y in 0..oh {
        for (t, &k) in taps.iter().enumerate() {
            let src = &tmp[(y + t) * ow..(y + t + 1) * ow];
            let dst = &mut out[y * ow..(y + 1) * ow];
            for x in 0..ow {
                dst[x] += k * src[x];
            }
        }
    }
    Plane::new(ow, oh, out)
}

/// Keeps every other sample in both directions, starting at (0, 0).
pub fn decimate2(plane: &Plane) -> Plane {
    let w = plane.width().div_ceil(2);
    let h = plane.height().div_ceil(2);
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let row = plane.row(2 * y);
        for x in 0..w {
            data.push(row[2 * x]);
        }
    }
    Plane::new(w, h, data).expect("decimation of nonempty plane is nonempty")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_kernel_is_normalized_and_symmetric() {
        let k = Kernel1d::gaussian(7.0 / 6.0, 7).unwrap();
        let sum: f64 = k.weights().iter().sum();
        assert!((sum - 1.0).abs() < 1e-12);
        for i in 0..k.len() {
            assert_eq!(k.weights()[i], k.weights()[k.len() - 1 - i]);
        }
    }

    #[test]
    fn gaussian_center_weight_matches_direct_evaluation() {
        // oracle: exp(0) / sum over the 7x7 grid of exp(-(x^2+y^2)/(2 s^2))
        let sigma = 7.0 / 6.0;
        let mut total = 0.0;
        for y in -3i32..=3 {
            for x in -3i32..=3 {
                total += (-((x * x + y * y) as f64) / (2.0 * sigma * sigma)).exp();
            }
        }
        let k = Kernel1d::gaussian(sigma, 7).unwrap();
        let center_2d = k.weights()[3] * k.weights()[3];
        assert!(
            (center_2d - 1.0 / total).abs() < 1e-12,
            "{center_2d} vs {}",
            1.0 / total
        );
    }

    #[test]
    fn gaussian_auto_support() {
        // sigma = 2.0 -> radius ceil(6) = 6 -> 13 taps
        assert_eq!(Kernel1d::gaussian_auto(2.0).unwrap().len(), 13);
        // sigma = 0.25 -> radius ceil(0.75) = 1 -> 3 taps
        assert_eq!(Kernel1d::gaussian_auto(0.25).unwrap().len(), 3);
    }

    #[test]
    fn reflect_folds_any_overhang() {
        // pattern for n = 3: ... 1 0 | 0 1 2 | 2 1 0 | 0 1 2 ...
        assert_eq!(reflect(-1, 3), 0);
        assert_eq!(reflect(-3, 3), 2);
        assert_eq!(reflect(3, 3), 2);
        assert_eq!(reflect(5, 3), 0);
        assert_eq!(reflect(6, 3), 0);
        assert_eq!(reflect(-7, 3), 0);
    }

    #[test]
    fn reflect_convolution_preserves_constants() {
        let p = Plane::filled(9, 5, 42.0);
        let k = Kernel1d::gaussian(7.0 / 6.0, 7).unwrap();
        let f = convolve_reflect(&p, &k);
        for &v in f.data() {
            assert!((v - 42.0).abs() < 1e-12);
        }
    }

    #[test]
    fn reflect_convolution_of_impulse_reproduces_kernel() {
        let impulse = Plane::from_fn(15, 15, |x, y| if x == 7 && y == 7 { 1.0 } else { 0.0 });
        let k = Kernel1d::gaussian(7.0 / 6.0, 7).unwrap();
        let f = convolve_reflect(&impulse, &k);
        for dy in -3isize..=3 {
            for dx in -3isize..=3 {
                let expect = k.weights()[(dx + 3) as usize] * k.weights()[(dy + 3) as usize];
                let got = f.get((7 + dx) as usize, (7 + dy) as usize);
                assert!(
                    (got - expect).abs() < 1e-15,
                    "at ({dx},{dy}): {got} vs {expect}"
                );
            }
        }
        // outside the kernel support everything stays zero
        assert_eq!(f.get(0, 0), 0.0);
    }

    #[test]
    fn valid_convolution_shrinks_by_radius() {
        let p = Plane::filled(10, 8, 3.0);
        let k = Kernel1d::gaussian(1.0, 5).unwrap();
        let f = convolve_valid(&p, &k).unwrap();
        assert_eq!((f.width(), f.height()), (6, 4));
        for &v in f.data() {
            assert!((v - 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn valid_convolution_rejects_small_planes() {
        let p = Plane::filled(4, 9, 0.0);
        let k = Kernel1d::gaussian(1.0, 5).unwrap();
        assert!(matches!(convolve_valid(&p, &k), Err(Error::Scale(_))));
    }

    #[test]
    fn decimation_takes_even_indices() {
        let p = Plane::from_fn(5, 3, |x, y| (y * 10 + x) as f64);
        let d = decimate2(&p);
        assert_eq!((d.width(), d.height()), (3, 2));
        assert_eq!(d.data(), &[0.0, 2.0, 4.0, 20.0, 22.0, 24.0]);
    }
}
