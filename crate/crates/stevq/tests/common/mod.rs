//! Shared helpers for integration tests: deterministic synthetic clips,
//! a blur+quantization distortion family, and manifest writing.

#![allow(dead_code)]

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use rand_distr::{Distribution, Normal};

use stevq::video::write_y4m;
use stevq_core::filter::{convolve_reflect, Kernel1d};
use stevq_core::Plane;

/// A base texture that tiles the torus, so integer scrolling is seamless.
pub fn base_texture(kind: usize, w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = StdRng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 1.0).unwrap();
    let noise: Vec<f64> = (0..w * h).map(|_| normal.sample(&mut rng)).collect();
    let tau = std::f64::consts::TAU;
    Plane::from_fn(w, h, |x, y| {
        let (fx, fy) = (x as f64 / w as f64, y as f64 / h as f64);
        let n = noise[y * w + x];
        let v = match kind {
            // diagonal ramp plus a coarse wave
            0 => {
                128.0
                    + 60.0 * ((fx + fy) * tau).sin()
                    + 25.0 * (3.0 * tau * fx).cos() * (2.0 * tau * fy).sin()
                    + 4.0 * n
            }
            // band-limited noise field
            1 => 128.0 + 10.0 * (2.0 * tau * fy).sin() + 24.0 * n,
            // textured blobs
            _ => {
                120.0
                    + 45.0 * (4.0 * tau * fx).sin() * (3.0 * tau * fy).cos()
                    + 20.0 * (7.0 * tau * (fx + 0.5 * fy)).sin()
                    + 6.0 * n
            }
        };
        v.clamp(4.0, 251.0)
    })
}

/// Kind 1 smooths its noise so the field stays band-limited.
pub fn content_frames(kind: usize, frames: usize, w: usize, h: usize, seed: u64) -> Vec<Plane> {
    let mut texture = base_texture(kind, w, h, seed);
    if kind == 1 {
        let smooth = Kernel1d::gaussian(1.2, 7).unwrap();
        texture = convolve_reflect(&texture, &smooth);
    }
    let (dx, dy) = match kind {
        0 => (2usize, 1usize),
        1 => (1, 2),
        _ => (0, 0), // static scene
    };
    (0..frames)
        .map(|f| roll(&texture, f * dx, f * dy))
        .collect()
}

/// Toroidal shift; consecutive frames differ by the same translation, so
/// content motion statistics are exactly constant over time.
pub fn roll(plane: &Plane, dx: usize, dy: usize) -> Plane {
    let (w, h) = (plane.width(), plane.height());
    Plane::from_fn(w, h, |x, y| plane.get((x + dx) % w, (y + dy) % h))
}

/// Separable blur plus quantization; severity 1..=4 doubles both knobs.
pub fn distort(frames: &[Plane], severity: usize) -> Vec<Plane> {
    assert!((1..=4).contains(&severity));
    let sigma = 0.5 * (1 << (severity - 1)) as f64; // 0.5, 1, 2, 4
    let step = (1 << (severity + 1)) as f64; // 4, 8, 16, 32
    let kernel = Kernel1d::gaussian_auto(sigma).unwrap();
    frames
        .iter()
        .map(|frame| {
            let blurred = convolve_reflect(frame, &kernel);
            Plane::from_fn(frame.width(), frame.height(), |x, y| {
                ((blurred.get(x, y) / step).round() * step).clamp(0.0, 255.0)
            })
        })
        .collect()
}

/// Synthetic subjective score: a fixed decreasing function of severity
/// plus a per-content offset.
pub fn synthetic_mos(severity: usize, content: usize) -> f64 {
    let offset = [0.0, 3.0, -3.0][content % 3];
    95.0 - 16.0 * severity as f64 + offset
}

pub struct ManifestBuilder {
    rows: Vec<String>,
    has_grid: bool,
}

impl ManifestBuilder {
    pub fn new() -> Self {
        Self {
            rows: Vec::new(),
            has_grid: false,
        }
    }

    pub fn with_grid(mut self) -> Self {
        self.has_grid = true;
        self
    }

    pub fn push(
        &mut self,
        content_id: &str,
        ref_path: &Path,
        dist_path: &Path,
        mos: Option<f64>,
        dataset: Option<&str>,
    ) {
        let mos = mos.map(|m| m.to_string()).unwrap_or_default();
        self.rows.push(format!(
            "{content_id},{},{},,,,,{mos},{}",
            ref_path.display(),
            dist_path.display(),
            dataset.unwrap_or(""),
        ));
    }

    pub fn push_grid_cell(
        &mut self,
        content_id: &str,
        ref_path: &Path,
        dist_path: &Path,
        res: &str,
        crf: &str,
    ) {
        self.rows.push(format!(
            "{content_id},{},{},,,,,,,{res},{crf}",
            ref_path.display(),
            dist_path.display(),
        ));
    }

    pub fn write(&self, path: &Path) {
        let mut text =
            String::from("content_id,ref_path,dist_path,width,height,pix_fmt,fps,mos,dataset");
        if self.has_grid {
            text.push_str(",res,crf");
        }
        text.push('\n');
        for row in &self.rows {
            let want: usize = if self.has_grid { 11 } else { 9 };
            let have = row.split(',').count();
            let _ = writeln!(text, "{row}{}", ",".repeat(want.saturating_sub(have)));
        }
        std::fs::write(path, text).unwrap();
    }
}

/// Writes a (reference, distorted) clip pair as y4m files and returns the
/// paths.
pub fn write_pair(
    dir: &Path,
    name: &str,
    reference: &[Plane],
    distorted: &[Plane],
    fps: f64,
) -> (PathBuf, PathBuf) {
    let ref_path = dir.join(format!("{name}_ref.y4m"));
    let dist_path = dir.join(format!("{name}_dist.y4m"));
    write_y4m(&ref_path, reference, fps).unwrap();
    write_y4m(&dist_path, distorted, fps).unwrap();
    (ref_path, dist_path)
}

/// Gaussian noise plane with a fixed seed, for monotonicity probes.
pub fn noise_plane(w: usize, h: usize, seed: u64) -> Plane {
    let mut rng = StdRng::seed_from_u64(seed);
    let normal = Normal::new(0.0f64, 1.0).unwrap();
    Plane::from_fn(w, h, |_, _| normal.sample(&mut rng))
}

/// Uniformly random vector helper for SVR checks.
pub fn random_unit_vec(rng: &mut StdRng, dim: usize) -> Vec<f64> {
    (0..dim).map(|_| rng.random_range(0.0..1.0)).collect()
}
