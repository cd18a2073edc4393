//! Deterministic synthetic test images.

use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::error::{Error, Result};
use crate::image::GrayImage;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ImageKind {
    /// I.i.d. Gaussian noise; defaults are `mean = 2^(d-1)`, `sigma = 2^(d-1)/3`.
    NormalNoise { mean: Option<f64>, sigma: Option<f64> },
    /// Gaussian noise box-blurred with the given radius, rescaled back to the
    /// default mean and deviation.
    SmoothNoise { radius: usize },
    /// `round((2^d - 1) * (0.5 + 0.5 * sin(2 pi (x + y) / (period * sqrt 2))))`.
    SineDiag { period: f64 },
    Constant { value: u16 },
    /// Mixture of two narrow Gaussians low in the value range: a compact histogram.
    TwoMode,
    /// Random coarse content up-scaled 8x and equalized to a flat histogram.
    Equalized,
}

impl ImageKind {
    pub fn normal_noise() -> Self {
        ImageKind::NormalNoise {
            mean: None,
            sigma: None,
        }
    }

    pub fn sine_diag() -> Self {
        ImageKind::SineDiag { period: 100.0 }
    }
}

pub fn gen_image(kind: ImageKind, width: usize, height: usize, bit_depth: u8, seed: u64) -> Result<GrayImage> {
    let mut img = GrayImage::new(width, height, bit_depth)?;
    let levels = img.levels() as f64;
    let top = levels - 1.0;
    let quantize = |v: f64| v.round().clamp(0.0, top) as u16;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let default_mean = levels / 2.0;
    let default_sigma = levels / 6.0;

    match kind {
        ImageKind::NormalNoise { mean, sigma } => {
            let normal = gaussian(mean.unwrap_or(default_mean), sigma.unwrap_or(default_sigma))?;
            fill(&mut img, |_, _| quantize(normal.sample(&mut rng)));
        }
        ImageKind::SmoothNoise { radius } => {
            let raw: Vec<f64> = (0..width * height)
                .map(|_| rng.sample::<f64, _>(rand_distr::StandardNormal))
                .collect();
            let blurred = blur(&raw, width, height, radius);
            let mean = blurred.iter().sum::<f64>() / blurred.len() as f64;
            let var = blurred.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / blurred.len() as f64;
            let scale = if var > 0.0 { default_sigma / var.sqrt() } else { 0.0 };
            fill(&mut img, |x, y| {
                quantize(default_mean + (blurred[y * width + x] - mean) * scale)
            });
        }
        ImageKind::SineDiag { period } => {
            if period.is_nan() || period <= 0.0 {
                return Err(Error::input(format!("sine period must be positive, got {period}")));
            }
            let k = 2.0 * PI / (period * 2f64.sqrt());
            fill(&mut img, |x, y| quantize(top * (0.5 + 0.5 * (k * (x + y) as f64).sin())));
        }
        ImageKind::Constant { value } => {
            if f64::from(value) > top {
                return Err(Error::input(format!("constant {value} exceeds {bit_depth}-bit range")));
            }
            fill(&mut img, |_, _| value);
        }
        ImageKind::TwoMode => {
            let dark = gaussian(0.12 * levels, levels / 80.0)?;
            let mid = gaussian(0.28 * levels, levels / 64.0)?;
            fill(&mut img, |_, _| {
                let v = if rng.random_bool(0.7) {
                    dark.sample(&mut rng)
                } else {
                    mid.sample(&mut rng)
                };
                quantize(v)
            });
        }
        ImageKind::Equalized => {
            // Random coarse grid bilinearly up-scaled by `UPSCALE`, like an
            // enlarged photograph, then rank-transformed to a flat histogram.
            const UPSCALE: usize = 8;
            let (gw, gh) = (width / UPSCALE + 2, height / UPSCALE + 2);
            let grid: Vec<f64> = (0..gw * gh).map(|_| rng.random::<f64>()).collect();
            let relief: Vec<f64> = (0..width * height)
                .map(|i| {
                    let fx = (i % width) as f64 / UPSCALE as f64;
                    let fy = (i / width) as f64 / UPSCALE as f64;
                    let (x0, y0) = (fx as usize, fy as usize);
                    let (tx, ty) = (fx - x0 as f64, fy - y0 as f64);
                    let g = |x: usize, y: usize| grid[y * gw + x];
                    (1.0 - ty) * ((1.0 - tx) * g(x0, y0) + tx * g(x0 + 1, y0))
                        + ty * ((1.0 - tx) * g(x0, y0 + 1) + tx * g(x0 + 1, y0 + 1))
                })
                .collect();
            let mut order: Vec<usize> = (0..relief.len()).collect();
            order.sort_by(|&a, &b| relief[a].total_cmp(&relief[b]).then(a.cmp(&b)));
            let mut flat = vec![0u16; relief.len()];
            for (r, &i) in order.iter().enumerate() {
                flat[i] = quantize(((r as f64 + 0.5) * levels / relief.len() as f64).floor());
            }
            fill(&mut img, |x, y| flat[y * width + x]);
        }
    }
    Ok(img)
}

fn gaussian(mean: f64, sigma: f64) -> Result<Normal<f64>> {
    Normal::new(mean, sigma).map_err(|e| Error::input(format!("bad normal parameters: {e}")))
}

fn fill<F: FnMut(usize, usize) -> u16>(img: &mut GrayImage, mut f: F) {
    for y in 0..img.height() {
        for x in 0..img.width() {
            let v = f(x, y);
            img.set(x, y, v);
        }
    }
}

/// Separable box blur with replicated borders.
fn blur(src: &[f64], width: usize, height: usize, radius: usize) -> Vec<f64> {
    if radius == 0 {
        return src.to_vec();
    }
    let r = radius as isize;
    let pass = |src: &[f64], horizontal: bool| {
        let mut out = vec![0.0; src.len()];
        for y in 0..height {
            for x in 0..width {
                let mut sum = 0.0;
                for d in -r..=r {
                    let (sx, sy) = if horizontal {
                        ((x as isize + d).clamp(0, width as isize - 1) as usize, y)
                    } else {
                        (x, (y as isize + d).clamp(0, height as isize - 1) as usize)
                    };
                    sum += src[sy * width + sx];
                }
                out[y * width + x] = sum / (2 * r + 1) as f64;
            }
        }
        out
    };
    pass(&pass(src, true), false)
}
