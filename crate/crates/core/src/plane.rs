//! Row-major sample planes and the dyadic scale pyramid.
//!
//! A [`Plane`] stores one frame's luma samples, one frame difference, or any
//! downscaled version of either. Values are kept as `f64` from the moment a
//! file is decoded so that every downstream statistic works on real numbers.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// A two-dimensional array of real-valued samples in row-major order.
///
/// Used both for luma planes (nonnegative code values) and frame-difference
/// planes (signed values).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    width: usize,
    height: usize,
    data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Scale(format!("empty plane {width}x{height}")));
        }
        if data.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "plane {width}x{height} needs {} samples, got {}",
                width * height,
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    /// Builds a plane by evaluating `f(x, y)` at every sample position.
    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        debug_assert!(x < self.width && y < self.height);
        self.data[y * self.width + x]
    }

    #[inline]
    pub fn row(&self, y: usize) -> &[f64] {
        &self.data[y * self.width..(y + 1) * self.width]
    }

    pub fn same_size(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    /// Element-wise `self + other`, used by tests and synthetic inputs.
    pub fn add(&self, other: &Plane) -> Result<Plane> {
        if !self.same_size(other) {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        Plane::new(self.width, self.height, data)
    }

    /// Element-wise offset by a constant.
    pub fn offset(&self, c: f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v + c).collect(),
        }
    }

    /// Element-wise scaling by a constant.
    pub fn scale(&self, c: f64) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            data: self.data.iter().map(|v| v * c).collect(),
        }
    }
}

/// Element-wise `next - curr`, the temporal difference between two frames.
pub fn frame_difference(next: &Plane, curr: &Plane) -> Result<Plane> {
    if !next.same_size(curr) {
        return Err(Error::DimensionMismatch(format!(
            "frame difference needs matching planes, got {}x{} vs {}x{}",
            next.width, next.height, curr.width, curr.height
        )));
    }
    let data = next
        .data
        .iter()
        .zip(&curr.data)
        .map(|(n, c)| n - c)
        .collect();
    Plane::new(next.width, next.height, data)
}

/// Applies `k` successive 2x reductions, each a non-overlapping 2x2 box
/// average. Trailing odd rows/columns are dropped at every step.
pub fn dyadic_downsample(plane: &Plane, k: u32) -> Result<Plane> {
    let mut out = plane.clone();
    for _ in 0..k {
        out = halve(&out)?;
    }
    Ok(out)
}

fn halve(plane: &Plane) -> Result<Plane> {
    let (w, h) = (plane.width / 2, plane.height / 2);
    if w == 0 || h == 0 {
        return Err(Error::Scale(format!(
            "cannot halve a {}x{} plane",
            plane.width, plane.height
        )));
    }
    let mut data = Vec::with_capacity(w * h);
    for y in 0..h {
        let top = plane.row(2 * y);
        let bottom = plane.row(2 * y + 1);
        for x in 0..w {
            let sum = top[2 * x] + top[2 * x + 1] + bottom[2 * x] + bottom[2 * x + 1];
            data.push(sum * 0.25);
        }
    }
    Plane::new(w, h, data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn difference_of_identical_planes_is_zero() {
        let p = Plane::from_fn(8, 6, |x, y| (x * y) as f64);
        let d = frame_difference(&p, &p).unwrap();
        assert!(d.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn difference_of_constant_planes() {
        let next = Plane::filled(4, 4, 10.0);
        let curr = Plane::filled(4, 4, 4.0);
        let d = frame_difference(&next, &curr).unwrap();
        assert!(d.data().iter().all(|&v| v == 6.0));
    }

    #[test]
    fn difference_of_checkerboard_and_inverse() {
        let board = Plane::from_fn(6, 6, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 255.0 });
        let inverse = Plane::from_fn(6, 6, |x, y| if (x + y) % 2 == 0 { 255.0 } else { 0.0 });
        let d = frame_difference(&board, &inverse).unwrap();
        for y in 0..6 {
            for x in 0..6 {
                let expect = if (x + y) % 2 == 0 { -255.0 } else { 255.0 };
                assert_eq!(d.get(x, y), expect);
            }
        }
    }

    #[test]
    fn difference_rejects_mismatched_planes() {
        let a = Plane::filled(4, 4, 0.0);
        let b = Plane::filled(4, 5, 0.0);
        assert!(matches!(
            frame_difference(&a, &b),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn downsample_zero_steps_is_identity() {
        let p = Plane::from_fn(5, 7, |x, y| (3 * x + y) as f64);
        assert_eq!(dyadic_downsample(&p, 0).unwrap(), p);
    }

    #[test]
    fn downsample_of_constant_plane() {
        let p = Plane::filled(4, 4, 8.0);
        let d = dyadic_downsample(&p, 1).unwrap();
        assert_eq!(d.width(), 2);
        assert_eq!(d.height(), 2);
        assert!(d.data().iter().all(|&v| v == 8.0));
    }

    #[test]
    fn downsample_box_average() {
        let p = Plane::new(2, 2, vec![0.0, 4.0, 8.0, 4.0]).unwrap();
        let d = dyadic_downsample(&p, 1).unwrap();
        assert_eq!(d.data(), &[4.0]);
    }

    #[test]
    fn downsample_drops_trailing_odd_row_and_column() {
        let p = Plane::from_fn(5, 3, |x, y| (y * 5 + x) as f64);
        let d = dyadic_downsample(&p, 1).unwrap();
        assert_eq!((d.width(), d.height()), (2, 1));
        // rows 0-1, cols 0-1 and 2-3; row 2 / col 4 ignored
        assert_eq!(
            d.data(),
            &[(0.0 + 1.0 + 5.0 + 6.0) / 4.0, (2.0 + 3.0 + 7.0 + 8.0) / 4.0]
        );
    }

    #[test]
    fn downsample_below_one_block_fails() {
        let p = Plane::filled(2, 2, 1.0);
        assert!(matches!(dyadic_downsample(&p, 2), Err(Error::Scale(_))));
    }

    proptest! {
        #[test]
        fn difference_is_antisymmetric(
            w in 1usize..12, h in 1usize..12, seed in any::<u64>()
        ) {
            let a = pseudo_plane(w, h, seed);
            let b = pseudo_plane(w, h, seed.wrapping_add(1));
            let ab = frame_difference(&a, &b).unwrap();
            let ba = frame_difference(&b, &a).unwrap();
            for (x, y) in ab.data().iter().zip(ba.data()) {
                prop_assert_eq!(*x, -*y);
            }
        }

        #[test]
        fn downsample_composes_on_even_planes(
            wq in 1usize..8, hq in 1usize..8, seed in any::<u64>()
        ) {
            // dimensions divisible by 4 so both orders see exact halvings
            let p = pseudo_plane(wq * 4, hq * 4, seed);
            let once = dyadic_downsample(&p, 2).unwrap();
            let twice = dyadic_downsample(&dyadic_downsample(&p, 1).unwrap(), 1).unwrap();
            prop_assert_eq!(once.width(), twice.width());
            for (a, b) in once.data().iter().zip(twice.data()) {
                prop_assert!((a - b).abs() < 1e-12);
            }
        }
    }

    fn pseudo_plane(w: usize, h: usize, seed: u64) -> Plane {
        let mut state = seed | 1;
        Plane::from_fn(w, h, |_, _| {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            (state >> 40) as f64 / 256.0
        })
    }
}
