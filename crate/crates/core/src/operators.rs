//! Matrix-free fan-beam projection operators.
//!
//! The forward operator integrates an image along each source-to-bin ray
//! using exact radiological path lengths: every ray is traversed cell by
//! cell and contributes the geometric intersection length of the ray with
//! each pixel it crosses. Backprojection reuses the *identical* weight
//! enumeration as the transpose of the same sparse action, so the two are
//! exact adjoints by construction (up to summation rounding) rather than
//! a matched-but-independent pair.
//!
//! The induced matrix (`n_views * n_bins` rows by `width * height`
//! columns) is never formed; at the default experiment scale it would be
//! 82080 x 65536.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::geometry::{FanBeamGeometry, GridSpec};
use crate::image::{Image, Sinogram};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Fixed chunk count for backprojection accumulation. Partial images are
/// reduced in chunk order, so results are bit-identical for any thread
/// count.
const BACKPROJECT_CHUNKS: usize = 16;

/// Walk a ray through the grid, calling `emit(pixel_index, length)` for
/// every pixel the segment `src -> dst` crosses, with `length` the exact
/// intersection length in physical units.
///
/// Incremental plane-crossing traversal: track the parameter of the next
/// vertical and horizontal grid-line crossing and advance whichever comes
/// first. Corner hits advance both axes with a zero-length segment in
/// between, which is harmless.
pub(crate) fn for_each_ray_weight<F: FnMut(usize, f64)>(
    grid: &GridSpec,
    src: (f64, f64),
    dst: (f64, f64),
    mut emit: F,
) {
    let nx = grid.width;
    let ny = grid.height;
    let h = grid.pixel_size;
    let xmin = -0.5 * grid.physical_width();
    let ymin = -0.5 * grid.physical_height();
    let xmax = xmin + nx as f64 * h;
    let ymax = ymin + ny as f64 * h;

    let dx = dst.0 - src.0;
    let dy = dst.1 - src.1;
    let ray_len = dx.hypot(dy);
    if ray_len == 0.0 {
        return;
    }

    // Clip the segment parameter range to the grid bounding box.
    let mut t_min: f64 = 0.0;
    let mut t_max: f64 = 1.0;
    if dx != 0.0 {
        let t1 = (xmin - src.0) / dx;
        let t2 = (xmax - src.0) / dx;
        t_min = t_min.max(t1.min(t2));
        t_max = t_max.min(t1.max(t2));
    } else if src.0 < xmin || src.0 > xmax {
        return;
    }
    if dy != 0.0 {
        let t1 = (ymin - src.1) / dy;
        let t2 = (ymax - src.1) / dy;
        t_min = t_min.max(t1.min(t2));
        t_max = t_max.min(t1.max(t2));
    } else if src.1 < ymin || src.1 > ymax {
        return;
    }
    if t_max <= t_min {
        return;
    }

    // Entry cell. Entry exactly on a grid line floors to the higher cell;
    // the traversal then emits a zero-length first segment when moving in
    // the negative direction, which is harmless.
    let x_entry = src.0 + t_min * dx;
    let y_entry = src.1 + t_min * dy;
    let mut ix = (((x_entry - xmin) / h).floor() as isize).clamp(0, nx as isize - 1);
    let mut iy = (((y_entry - ymin) / h).floor() as isize).clamp(0, ny as isize - 1);

    // Parameter of the next vertical / horizontal plane crossing.
    let (mut t_next_x, dt_x, step_x) = if dx > 0.0 {
        let plane = xmin + (ix + 1) as f64 * h;
        ((plane - src.0) / dx, h / dx, 1isize)
    } else if dx < 0.0 {
        let plane = xmin + ix as f64 * h;
        ((plane - src.0) / dx, -h / dx, -1isize)
    } else {
        (f64::INFINITY, f64::INFINITY, 0isize)
    };
    let (mut t_next_y, dt_y, step_y) = if dy > 0.0 {
        let plane = ymin + (iy + 1) as f64 * h;
        ((plane - src.1) / dy, h / dy, 1isize)
    } else if dy < 0.0 {
        let plane = ymin + iy as f64 * h;
        ((plane - src.1) / dy, -h / dy, -1isize)
    } else {
        (f64::INFINITY, f64::INFINITY, 0isize)
    };

    let mut t = t_min;
    // A ray crosses at most nx + ny + 1 cells; the bound guards against
    // rounding-induced stalls.
    for _ in 0..(nx + ny + 4) {
        let t_end = t_next_x.min(t_next_y).min(t_max);
        let w = (t_end - t) * ray_len;
        if w > 0.0 {
            emit(iy as usize * nx + ix as usize, w);
        }
        if t_end >= t_max {
            break;
        }
        if t_next_x <= t_end {
            ix += step_x;
            t_next_x += dt_x;
        }
        if t_next_y <= t_end {
            iy += step_y;
            t_next_y += dt_y;
        }
        if ix < 0 || ix >= nx as isize || iy < 0 || iy >= ny as isize {
            break;
        }
        t = t_end;
    }
}

fn check_grid(x: &Image, g: &FanBeamGeometry) -> Result<()> {
    if !g.grid.matches_image(x) {
        return Err(Error::Config(format!(
            "image grid {}x{} (pixel {}) does not match geometry grid {}x{} (pixel {})",
            x.width(),
            x.height(),
            x.pixel_size(),
            g.grid.width,
            g.grid.height,
            g.grid.pixel_size
        )));
    }
    Ok(())
}

fn check_sinogram(s: &Sinogram, g: &FanBeamGeometry) -> Result<()> {
    if s.n_views() != g.n_views() || s.n_bins() != g.n_bins {
        return Err(Error::Config(format!(
            "sinogram {}x{} does not match geometry {}x{}",
            s.n_views(),
            s.n_bins(),
            g.n_views(),
            g.n_bins
        )));
    }
    Ok(())
}

fn project_row(x: &Image, g: &FanBeamGeometry, view: usize, row: &mut [f64]) {
    let src = g.source_position(view);
    let data = x.data();
    for (bin, out) in row.iter_mut().enumerate() {
        let dst = g.detector_bin_position(view, bin);
        let mut acc = 0.0;
        for_each_ray_weight(&g.grid, src, dst, |px, w| acc += w * data[px]);
        *out = acc;
    }
}

/// Forward projection: line integrals of `x` along every ray of `g`.
pub fn project(x: &Image, g: &FanBeamGeometry) -> Result<Sinogram> {
    check_grid(x, g)?;
    if !x.all_finite() {
        return Err(Error::Input("cannot project a non-finite image".into()));
    }
    let n_bins = g.n_bins;
    let mut out = Sinogram::zeros(g.n_views(), n_bins);
    out.data_mut()
        .par_chunks_mut(n_bins)
        .enumerate()
        .for_each(|(view, row)| project_row(x, g, view, row));
    Ok(out)
}

/// Forward projection restricted to a subset of views. Row `i` of the
/// result holds the bins of `views[i]`.
pub fn project_views(x: &Image, g: &FanBeamGeometry, views: &[usize]) -> Result<Vec<f64>> {
    check_grid(x, g)?;
    if let Some(&v) = views.iter().find(|&&v| v >= g.n_views()) {
        return Err(Error::Config(format!(
            "view index {v} out of range ({} views)",
            g.n_views()
        )));
    }
    let n_bins = g.n_bins;
    let mut out = vec![0.0; views.len() * n_bins];
    out.par_chunks_mut(n_bins)
        .zip(views.par_iter())
        .for_each(|(row, &view)| project_row(x, g, view, row));
    Ok(out)
}

fn accumulate_view(acc: &mut [f64], g: &FanBeamGeometry, view: usize, row: &[f64]) {
    let src = g.source_position(view);
    for (bin, &value) in row.iter().enumerate() {
        if value == 0.0 {
            continue;
        }
        let dst = g.detector_bin_position(view, bin);
        for_each_ray_weight(&g.grid, src, dst, |px, w| acc[px] += value * w);
    }
}

/// Backprojection over a list of (view, row-of-bins) pairs. Accumulation
/// runs over [`BACKPROJECT_CHUNKS`] fixed chunks reduced in order.
fn backproject_rows(g: &FanBeamGeometry, rows: Vec<(usize, &[f64])>) -> Image {
    let n_pix = g.grid.width * g.grid.height;
    let chunk_size = rows.len().div_ceil(BACKPROJECT_CHUNKS).max(1);
    let partials: Vec<Vec<f64>> = rows
        .par_chunks(chunk_size)
        .map(|chunk| {
            let mut local = vec![0.0; n_pix];
            for (view, row) in chunk {
                accumulate_view(&mut local, g, *view, row);
            }
            local
        })
        .collect();
    let mut out = vec![0.0; n_pix];
    for partial in partials {
        for (o, p) in out.iter_mut().zip(partial) {
            *o += p;
        }
    }
    Image::raw(g.grid.width, g.grid.height, g.grid.pixel_size, out)
}

/// Exact adjoint of [`project`]: `<project(x), s> == <x, backproject(s)>`
/// up to floating-point summation error.
pub fn backproject(s: &Sinogram, g: &FanBeamGeometry) -> Result<Image> {
    check_sinogram(s, g)?;
    let rows: Vec<(usize, &[f64])> = (0..g.n_views()).map(|v| (v, s.view_row(v))).collect();
    Ok(backproject_rows(g, rows))
}

/// Adjoint restricted to a view subset; `rows` is laid out as produced by
/// [`project_views`] for the same `views` list.
pub fn backproject_views(
    rows: &[f64],
    g: &FanBeamGeometry,
    views: &[usize],
) -> Result<Image> {
    if rows.len() != views.len() * g.n_bins {
        return Err(Error::Config(format!(
            "row data length {} does not match {} views x {} bins",
            rows.len(),
            views.len(),
            g.n_bins
        )));
    }
    if let Some(&v) = views.iter().find(|&&v| v >= g.n_views()) {
        return Err(Error::Config(format!(
            "view index {v} out of range ({} views)",
            g.n_views()
        )));
    }
    let pairs: Vec<(usize, &[f64])> = views
        .iter()
        .copied()
        .zip(rows.chunks(g.n_bins))
        .collect();
    Ok(backproject_rows(g, pairs))
}

/// Gradient of `0.5 * ||Ax - b||^2`: `backproject(project(x) - b)`.
pub fn ls_gradient(x: &Image, b: &Sinogram, g: &FanBeamGeometry) -> Result<Image> {
    Ok(ls_gradient_with_fidelity(x, b, g)?.0)
}

/// Gradient plus the data-fidelity value `0.5 * ||Ax - b||^2` at `x`,
/// sharing the single forward projection both need.
pub fn ls_gradient_with_fidelity(
    x: &Image,
    b: &Sinogram,
    g: &FanBeamGeometry,
) -> Result<(Image, f64)> {
    check_sinogram(b, g)?;
    let residual = project(x, g)?.axpy(-1.0, b);
    let fidelity = 0.5 * residual.dot(&residual);
    Ok((backproject(&residual, g)?, fidelity))
}

/// Result of the power-iteration spectral estimate.
#[derive(Debug, Clone, Copy)]
pub struct SpectralEstimate {
    /// Rayleigh quotient for the dominant eigenvalue of `A^T A`, a lower
    /// bound on `||A||^2`.
    pub value: f64,
    /// Whether the relative change dropped below the tolerance before the
    /// iteration budget ran out.
    pub converged: bool,
    pub iterations: usize,
}

/// Estimate `||A||^2` by power iteration on `A^T A` from a seeded random
/// start. Always returns; `converged` reports whether `tol` was reached
/// within `iters` applications.
pub fn spectral_norm_sq(
    g: &FanBeamGeometry,
    iters: usize,
    tol: f64,
    seed: u64,
) -> SpectralEstimate {
    let iters = iters.max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut v = Image::from_fn(g.grid.width, g.grid.height, g.grid.pixel_size, |_, _| {
        rng.random_range(-1.0..1.0)
    });
    let n = v.norm();
    v = v.scaled(1.0 / n);

    let mut rayleigh = 0.0;
    let mut converged = false;
    let mut used = 0;
    for k in 1..=iters {
        used = k;
        let w = backproject(&project(&v, g).expect("validated grid"), g).expect("validated grid");
        let lam = v.dot(&w);
        let wn = w.norm();
        if wn == 0.0 {
            return SpectralEstimate {
                value: 0.0,
                converged: true,
                iterations: k,
            };
        }
        v = w.scaled(1.0 / wn);
        if k > 1 && (lam - rayleigh).abs() <= tol * lam.abs().max(f64::MIN_POSITIVE) {
            rayleigh = lam;
            converged = true;
            break;
        }
        rayleigh = lam;
    }
    SpectralEstimate {
        value: rayleigh,
        converged,
        iterations: used,
    }
}

/// Multiplier applied to the spectral estimate before inverting it into a
/// step size; power iteration approaches `||A||^2` from below.
pub const LIPSCHITZ_SAFETY: f64 = 1.05;

/// Step size `1 / (LIPSCHITZ_SAFETY * ||A||^2)` from a spectral estimate.
pub fn safe_step_size(estimate: &SpectralEstimate) -> f64 {
    1.0 / (LIPSCHITZ_SAFETY * estimate.value)
}

/// Bookkeeping for compute cost in units of one full-resolution
/// projection. Ray count is fixed by the geometry while per-ray traversal
/// length scales with the grid side, so a projection on a grid coarsened
/// by `factor` costs `1/factor` of a full one.
#[derive(Debug, Clone, PartialEq)]
pub struct CostModel {
    pub units_per_full_projection: f64,
    /// Cost of one downsample+upsample pair, in full-projection units.
    pub resample_units: f64,
}

impl Default for CostModel {
    fn default() -> Self {
        Self {
            units_per_full_projection: 1.0,
            resample_units: 0.05,
        }
    }
}

impl CostModel {
    /// Cost of one projection (or backprojection) on a grid whose side is
    /// divided by `factor`.
    pub fn projection_units(&self, factor: usize) -> f64 {
        self.units_per_full_projection / factor as f64
    }

    /// Same, restricted to `views` of `total_views` (ray-driven cost is
    /// proportional to ray count).
    pub fn projection_units_for_views(
        &self,
        factor: usize,
        views: usize,
        total_views: usize,
    ) -> f64 {
        self.projection_units(factor) * views as f64 / total_views as f64
    }
}
