//! Image-domain dimensionality reduction.
//!
//! Downsampling plays the role of the sketching operator: the
//! least-squares gradient is evaluated on a grid whose side is divided by
//! an integer factor, then carried back to full resolution by the
//! matching upsampler. Both directions are separable cubic-convolution
//! resamplers (Keys kernel, `a = -0.5`); downscaling widens the kernel
//! support by the factor and renormalizes per output sample, which is
//! what gives antialiasing and exact constant preservation.

use crate::error::{Error, Result};
use crate::geometry::FanBeamGeometry;
use crate::image::Image;

/// Edge handling for samples outside the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Clamp to the nearest edge sample.
    Replicate,
    /// Mirror about the edge sample.
    Reflect,
}

/// Parameters of the separable cubic resampler.
#[derive(Debug, Clone, PartialEq)]
pub struct ResampleSpec {
    /// Linear downscale (or upscale) per side; 1 is the identity.
    pub factor: usize,
    /// Cubic-convolution parameter `a`.
    pub kernel_a: f64,
    /// Widen the kernel by `factor` when downscaling.
    pub antialias: bool,
    pub boundary: Boundary,
}

impl ResampleSpec {
    /// The default bicubic resampler at a given factor.
    pub fn bicubic(factor: usize) -> Self {
        Self {
            factor,
            kernel_a: -0.5,
            antialias: true,
            boundary: Boundary::Replicate,
        }
    }
}

/// Keys cubic-convolution kernel with parameter `a`; support `|x| < 2`.
pub fn cubic_kernel(x: f64, a: f64) -> f64 {
    let t = x.abs();
    if t < 1.0 {
        ((a + 2.0) * t - (a + 3.0)) * t * t + 1.0
    } else if t < 2.0 {
        (((t - 5.0) * t + 8.0) * t - 4.0) * a
    } else {
        0.0
    }
}

fn map_index(i: isize, len: usize, boundary: Boundary) -> usize {
    match boundary {
        Boundary::Replicate => i.clamp(0, len as isize - 1) as usize,
        Boundary::Reflect => {
            let mut i = i;
            let n = len as isize;
            while i < 0 || i >= n {
                if i < 0 {
                    i = -i - 1;
                }
                if i >= n {
                    i = 2 * n - 1 - i;
                }
            }
            i as usize
        }
    }
}

/// One output sample of a 1D resampling pass: source indices (already
/// boundary-mapped) and normalized weights.
struct SamplePlan {
    indices: Vec<usize>,
    weights: Vec<f64>,
}

/// Build the 1D plan taking `in_len` samples to `out_len` samples.
/// `kernel_scale < 1` stretches the kernel for antialiased downscaling.
fn build_plan(
    in_len: usize,
    out_len: usize,
    spec: &ResampleSpec,
    center_of: impl Fn(usize) -> f64,
    kernel_scale: f64,
) -> Vec<SamplePlan> {
    let support = 2.0 / kernel_scale;
    (0..out_len)
        .map(|j| {
            let u = center_of(j);
            let first = (u - support).ceil() as isize;
            let last = (u + support).floor() as isize;
            let mut indices = Vec::with_capacity((last - first + 1) as usize);
            let mut weights = Vec::with_capacity(indices.capacity());
            let mut total = 0.0;
            for m in first..=last {
                let w = cubic_kernel((m as f64 - u) * kernel_scale, spec.kernel_a);
                if w != 0.0 {
                    indices.push(map_index(m, in_len, spec.boundary));
                    weights.push(w);
                    total += w;
                }
            }
            // Normalizing per output sample makes constants reproduce
            // exactly and keeps linear reproduction intact.
            for w in &mut weights {
                *w /= total;
            }
            SamplePlan { indices, weights }
        })
        .collect()
}

fn apply_rows(data: &[f64], width: usize, height: usize, plan: &[SamplePlan]) -> Vec<f64> {
    let out_w = plan.len();
    let mut out = vec![0.0; out_w * height];
    for r in 0..height {
        let row = &data[r * width..(r + 1) * width];
        let out_row = &mut out[r * out_w..(r + 1) * out_w];
        for (j, p) in plan.iter().enumerate() {
            let mut acc = 0.0;
            for (&i, &w) in p.indices.iter().zip(&p.weights) {
                acc += w * row[i];
            }
            out_row[j] = acc;
        }
    }
    out
}

fn apply_cols(data: &[f64], width: usize, plan: &[SamplePlan]) -> Vec<f64> {
    let out_h = plan.len();
    let mut out = vec![0.0; width * out_h];
    for (r, p) in plan.iter().enumerate() {
        let out_row = &mut out[r * width..(r + 1) * width];
        for (&i, &w) in p.indices.iter().zip(&p.weights) {
            let in_row = &data[i * width..(i + 1) * width];
            for (o, &v) in out_row.iter_mut().zip(in_row) {
                *o += w * v;
            }
        }
    }
    out
}

fn check_factor(spec: &ResampleSpec) -> Result<()> {
    if spec.factor == 0 {
        return Err(Error::Config("resample factor must be >= 1".into()));
    }
    Ok(())
}

/// Reduce each side by `spec.factor`. Values are preserved (intensities,
/// not integrals); the physical pixel size grows by the factor.
pub fn downsample(x: &Image, spec: &ResampleSpec) -> Result<Image> {
    check_factor(spec)?;
    let f = spec.factor;
    if f == 1 {
        return Ok(x.clone());
    }
    if !x.width().is_multiple_of(f) || !x.height().is_multiple_of(f) {
        return Err(Error::Config(format!(
            "image {}x{} is not divisible by factor {f}",
            x.width(),
            x.height()
        )));
    }
    let (out_w, out_h) = (x.width() / f, x.height() / f);
    let kernel_scale = if spec.antialias { 1.0 / f as f64 } else { 1.0 };
    // Output center j maps to input coordinate (j + 0.5) * f - 0.5.
    let center = |j: usize| (j as f64 + 0.5) * f as f64 - 0.5;
    let row_plan = build_plan(x.width(), out_w, spec, center, kernel_scale);
    let mid = apply_rows(x.data(), x.width(), x.height(), &row_plan);
    let col_plan = build_plan(x.height(), out_h, spec, center, kernel_scale);
    let out = apply_cols(&mid, out_w, &col_plan);
    Ok(Image::raw(out_w, out_h, x.pixel_size() * f as f64, out))
}

/// Enlarge each side by `spec.factor` with cubic interpolation (no
/// antialias widening on upscale); the physical pixel size shrinks by the
/// factor.
pub fn upsample(x: &Image, spec: &ResampleSpec) -> Result<Image> {
    check_factor(spec)?;
    let f = spec.factor;
    if f == 1 {
        return Ok(x.clone());
    }
    let (out_w, out_h) = (x.width() * f, x.height() * f);
    let center = |j: usize| (j as f64 + 0.5) / f as f64 - 0.5;
    let row_plan = build_plan(x.width(), out_w, spec, center, 1.0);
    let mid = apply_rows(x.data(), x.width(), x.height(), &row_plan);
    let col_plan = build_plan(x.height(), out_h, spec, center, 1.0);
    let out = apply_cols(&mid, out_w, &col_plan);
    Ok(Image::raw(out_w, out_h, x.pixel_size() / f as f64, out))
}

/// A full-resolution geometry paired with its coarse-grid counterpart:
/// same trajectory and detector, grid side divided by `factor`.
#[derive(Debug, Clone, PartialEq)]
pub struct SketchedGeometry {
    pub base: FanBeamGeometry,
    pub factor: usize,
    pub coarse: FanBeamGeometry,
}

/// Pair `base` with the geometry discretized on the grid coarsened by
/// `factor`. Projecting a downsampled image on `coarse` approximates
/// projecting the original on `base`.
pub fn make_sketched_geometry(base: &FanBeamGeometry, factor: usize) -> Result<SketchedGeometry> {
    let coarse = base.with_coarsened_grid(factor)?;
    Ok(SketchedGeometry {
        base: base.clone(),
        factor,
        coarse,
    })
}
