//! Iteration engines: the PnP-FISTA baseline and the multi-stage sketched
//! gradient solver (PnP-MS2G).
//!
//! Both run the same outer loop: take a gradient step on the data
//! fidelity from the extrapolated point `y`, pass the result through the
//! denoiser mixing step, and extrapolate with the convergent-FISTA
//! momentum `a_i = (i - 1) / (i + 3)`. The sketched solver differs only
//! in where the gradient comes from: `y` is downsampled by the current
//! stage's factor, the least-squares gradient is evaluated against the
//! stage's coarse-grid operator (in full, or over a uniformly sampled
//! minibatch of views), and the result is upsampled back before the step.
//! One global iteration counter runs across stage boundaries, so momentum
//! is never reset; at factor 1 the sketched solver degenerates to the
//! baseline exactly, iterate for iterate.
//!
//! Cost accounting is in units of one full-resolution projection: 2 units
//! per baseline iteration (project + backproject), `2/factor` scaled by
//! the sampled view fraction for sketched iterations, plus a flat
//! resampling charge.

use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::denoise::{red_pro_mix, DenoiserSpec};
use crate::error::{Error, Result};
use crate::geometry::FanBeamGeometry;
use crate::image::{Image, Sinogram};
use crate::metrics::psnr;
use crate::operators::{
    backproject_views, ls_gradient_with_fidelity, project_views, safe_step_size,
    spectral_norm_sq, CostModel,
};
use crate::sketch::{downsample, make_sketched_geometry, upsample, ResampleSpec};

/// Convergent-FISTA momentum coefficient for global iteration `i >= 1`.
pub fn momentum_coeff(i: usize) -> f64 {
    (i as f64 - 1.0) / (i as f64 + 3.0)
}

/// Step size choice for a stage (or for the baseline solver).
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepSize {
    /// `1 / (1.05 * ||A||^2)` with the spectral norm estimated by power
    /// iteration on the operator the stage actually uses.
    Auto,
    Fixed(f64),
}

/// Gradient estimator within a stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientOption {
    /// Full coarse-grid least-squares gradient.
    Deterministic,
    /// Restricted to a uniformly sampled subset of views each iteration,
    /// rescaled by `n_views / views` so the estimate stays unbiased.
    Minibatch { views: usize },
}

/// One stage of the multi-stage schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct StagePlan {
    /// Linear downscale per grid side; 1 means full resolution.
    pub factor: usize,
    pub n_iters: usize,
    pub step_size: StepSize,
    pub option: GradientOption,
}

impl StagePlan {
    pub fn deterministic(factor: usize, n_iters: usize) -> Self {
        Self {
            factor,
            n_iters,
            step_size: StepSize::Auto,
            option: GradientOption::Deterministic,
        }
    }

    pub fn minibatch(factor: usize, n_iters: usize, views: usize) -> Self {
        Self {
            factor,
            n_iters,
            step_size: StepSize::Auto,
            option: GradientOption::Minibatch { views },
        }
    }
}

/// The default two-stage schedule: an aggressive 16-fold pixel-count
/// reduction (side / 4) for the first two thirds of the budget, then a
/// 4-fold reduction (side / 2) for the rest.
pub fn default_stage_plans(total_iters: usize) -> Vec<StagePlan> {
    let first = (2 * total_iters).div_ceil(3).max(1);
    let second = total_iters.saturating_sub(first).max(1);
    vec![
        StagePlan::deterministic(4, first),
        StagePlan::deterministic(2, second),
    ]
}

/// Observable snapshot of a solver run after each iteration.
#[derive(Debug, Clone)]
pub struct SolverState {
    pub x: Image,
    pub x_prev: Image,
    pub y: Image,
    /// Global iteration counter, 1-based, continuous across stages.
    pub iter: usize,
    /// 1-based stage index (always 1 for the baseline solver).
    pub stage: usize,
    pub cost_units: f64,
}

/// Per-iteration record. `data_fidelity` is the least-squares value at
/// the extrapolated point the gradient was computed from; for sketched
/// stages that is the coarse-grid (and, for minibatch, view-rescaled)
/// surrogate, which coincides with the full fidelity at factor 1.
#[derive(Debug, Clone, PartialEq)]
pub struct TrajectoryRecord {
    pub iter: usize,
    pub stage: usize,
    pub psnr_db: f64,
    pub data_fidelity: f64,
    pub cost_units: f64,
    pub wall_seconds: f64,
    /// Momentum coefficient used by this iteration's extrapolation.
    pub momentum: f64,
}

/// Complete per-iteration history of one solver run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub records: Vec<TrajectoryRecord>,
}

pub const TRAJECTORY_CSV_HEADER: &str = "iter,stage,psnr_db,data_fidelity,cost_units,wall_seconds";

impl Trajectory {
    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn final_cost_units(&self) -> f64 {
        self.records.last().map_or(0.0, |r| r.cost_units)
    }

    pub fn final_psnr_db(&self) -> f64 {
        self.records.last().map_or(f64::NAN, |r| r.psnr_db)
    }

    /// CSV serialization under the stable schema. `zero_wall` replaces
    /// the wall-clock column with zeros for byte-reproducible artifacts.
    pub fn to_csv(&self, zero_wall: bool) -> String {
        let mut out = String::from(TRAJECTORY_CSV_HEADER);
        out.push('\n');
        for r in &self.records {
            let wall = if zero_wall { 0.0 } else { r.wall_seconds };
            out.push_str(&format!(
                "{},{},{},{},{},{}\n",
                r.iter, r.stage, r.psnr_db, r.data_fidelity, r.cost_units, wall
            ));
        }
        out
    }

    /// PSNR linearly interpolated at a cost-unit level, clamped to the
    /// recorded range.
    pub fn psnr_at_cost(&self, cost: f64) -> f64 {
        if self.records.is_empty() {
            return f64::NAN;
        }
        let first = &self.records[0];
        if cost <= first.cost_units {
            return first.psnr_db;
        }
        for pair in self.records.windows(2) {
            let (a, b) = (&pair[0], &pair[1]);
            if cost <= b.cost_units {
                let span = b.cost_units - a.cost_units;
                if span <= 0.0 {
                    return b.psnr_db;
                }
                let t = (cost - a.cost_units) / span;
                return a.psnr_db + t * (b.psnr_db - a.psnr_db);
            }
        }
        self.records.last().unwrap().psnr_db
    }
}

/// Power-iteration settings used when a step size is `Auto`. The seed is
/// fixed so matched runs resolve identical step sizes.
const AUTO_STEP_POWER_ITERS: usize = 200;
const AUTO_STEP_TOL: f64 = 1e-6;
const AUTO_STEP_SEED: u64 = 0x5eed;

/// Resolve the automatic step size for an operator geometry.
pub fn auto_step_size(g: &FanBeamGeometry) -> f64 {
    safe_step_size(&spectral_norm_sq(
        g,
        AUTO_STEP_POWER_ITERS,
        AUTO_STEP_TOL,
        AUTO_STEP_SEED,
    ))
}

fn record_psnr(x: &Image, reference: Option<&Image>) -> f64 {
    match reference {
        Some(r) => psnr(x, r, r.max_value().max(f64::MIN_POSITIVE)).unwrap_or(f64::NAN),
        None => f64::NAN,
    }
}

fn check_finite(x: &Image, stage: usize, iteration: usize) -> Result<()> {
    if x.all_finite() {
        Ok(())
    } else {
        Err(Error::Divergence {
            stage,
            iteration,
            detail: "iterate contains non-finite values".into(),
        })
    }
}

/// PnP-FISTA: full-resolution proximal-gradient iterations with denoiser
/// mixing and momentum. Records one trajectory entry per iteration
/// (PSNR against `reference` when given).
#[allow(clippy::too_many_arguments)]
pub fn pnp_fista(
    b: &Sinogram,
    g: &FanBeamGeometry,
    denoiser: &DenoiserSpec,
    alpha: f64,
    n_iters: usize,
    step: f64,
    x0: &Image,
    reference: Option<&Image>,
) -> Result<(Image, Trajectory)> {
    pnp_fista_with(
        b,
        g,
        denoiser,
        alpha,
        n_iters,
        step,
        x0,
        reference,
        &CostModel::default(),
        &mut |_| {},
    )
}

/// [`pnp_fista`] with an explicit cost model and a per-iteration observer.
#[allow(clippy::too_many_arguments)]
pub fn pnp_fista_with(
    b: &Sinogram,
    g: &FanBeamGeometry,
    denoiser: &DenoiserSpec,
    alpha: f64,
    n_iters: usize,
    step: f64,
    x0: &Image,
    reference: Option<&Image>,
    cost: &CostModel,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(Image, Trajectory)> {
    if step.is_nan() || step <= 0.0 || !step.is_finite() {
        return Err(Error::Config(format!("step size must be positive, got {step}")));
    }
    if !g.grid.matches_image(x0) {
        return Err(Error::Config("x0 does not match the geometry grid".into()));
    }
    let start = Instant::now();
    let mut trajectory = Trajectory::default();
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut cost_units = 0.0;
    let per_iter_cost = 2.0 * cost.projection_units(1);

    for i in 1..=n_iters {
        let (grad, fidelity) = ls_gradient_with_fidelity(&y, b, g)?;
        let z = y.axpy(-step, &grad);
        check_finite(&z, 1, i)?;
        let x_next = red_pro_mix(&z, denoiser, alpha)?;
        check_finite(&x_next, 1, i)?;
        let a_i = momentum_coeff(i);
        y = x_next.axpy(a_i, &x_next.axpy(-1.0, &x));
        let x_prev = std::mem::replace(&mut x, x_next);
        cost_units += per_iter_cost;

        trajectory.records.push(TrajectoryRecord {
            iter: i,
            stage: 1,
            psnr_db: record_psnr(&x, reference),
            data_fidelity: fidelity,
            cost_units,
            wall_seconds: start.elapsed().as_secs_f64(),
            momentum: a_i,
        });
        observer(&SolverState {
            x: x.clone(),
            x_prev,
            y: y.clone(),
            iter: i,
            stage: 1,
            cost_units,
        });
    }
    Ok((x, trajectory))
}

/// Uniform view-index subset of size `batch`, sampled without
/// replacement; returned sorted for a deterministic projection order.
pub fn sample_minibatch(
    n_views: usize,
    batch: usize,
    rng: &mut impl rand::Rng,
) -> Result<Vec<usize>> {
    if batch == 0 || batch > n_views {
        return Err(Error::Config(format!(
            "minibatch size {batch} out of range 1..={n_views}"
        )));
    }
    let mut idx: Vec<usize> = rand::seq::index::sample(rng, n_views, batch).into_iter().collect();
    idx.sort_unstable();
    Ok(idx)
}

/// Least-squares gradient restricted to `views`, rescaled by
/// `n_views / |views|` so its expectation over uniform subsets equals the
/// full gradient.
pub fn stochastic_gradient(
    v: &Image,
    b: &Sinogram,
    coarse: &FanBeamGeometry,
    views: &[usize],
) -> Result<Image> {
    Ok(stochastic_gradient_with_fidelity(v, b, coarse, views)?.0)
}

fn stochastic_gradient_with_fidelity(
    v: &Image,
    b: &Sinogram,
    coarse: &FanBeamGeometry,
    views: &[usize],
) -> Result<(Image, f64)> {
    if views.is_empty() {
        return Err(Error::Config("minibatch view set must not be empty".into()));
    }
    if b.n_views() != coarse.n_views() || b.n_bins() != coarse.n_bins {
        return Err(Error::Config(format!(
            "sinogram {}x{} does not match geometry {}x{}",
            b.n_views(),
            b.n_bins(),
            coarse.n_views(),
            coarse.n_bins
        )));
    }
    let scale = coarse.n_views() as f64 / views.len() as f64;
    let mut rows = project_views(v, coarse, views)?;
    let n_bins = coarse.n_bins;
    let mut fidelity = 0.0;
    for (slot, &view) in views.iter().enumerate() {
        let measured = b.view_row(view);
        let row = &mut rows[slot * n_bins..(slot + 1) * n_bins];
        for (r, &m) in row.iter_mut().zip(measured) {
            *r -= m;
            fidelity += 0.5 * *r * *r;
        }
    }
    let grad = backproject_views(&rows, coarse, views)?;
    Ok((grad.scaled(scale), fidelity * scale))
}

struct PreparedStage {
    factor: usize,
    n_iters: usize,
    step: f64,
    option: GradientOption,
    coarse: FanBeamGeometry,
    resample: ResampleSpec,
    view_fraction: f64,
}

fn prepare_stages(
    g: &FanBeamGeometry,
    stages: &[StagePlan],
) -> Result<Vec<PreparedStage>> {
    if stages.is_empty() {
        return Err(Error::Config("stage list must not be empty".into()));
    }
    stages
        .iter()
        .map(|plan| {
            if plan.n_iters == 0 {
                return Err(Error::Config("stage iteration count must be >= 1".into()));
            }
            let sketched = make_sketched_geometry(g, plan.factor)?;
            let view_fraction = match plan.option {
                GradientOption::Deterministic => 1.0,
                GradientOption::Minibatch { views } => {
                    if views == 0 || views > g.n_views() {
                        return Err(Error::Config(format!(
                            "minibatch size {views} out of range 1..={}",
                            g.n_views()
                        )));
                    }
                    views as f64 / g.n_views() as f64
                }
            };
            let step = match plan.step_size {
                StepSize::Fixed(s) if s > 0.0 && s.is_finite() => s,
                StepSize::Fixed(s) => {
                    return Err(Error::Config(format!(
                        "stage step size must be positive, got {s}"
                    )))
                }
                StepSize::Auto => auto_step_size(&sketched.coarse),
            };
            Ok(PreparedStage {
                factor: plan.factor,
                n_iters: plan.n_iters,
                step,
                option: plan.option,
                coarse: sketched.coarse,
                resample: ResampleSpec::bicubic(plan.factor),
                view_fraction,
            })
        })
        .collect()
}

/// PnP-MS2G: multi-stage sketched gradient iterations.
///
/// Each iteration downsamples the extrapolated point to the stage's
/// coarse grid, evaluates the (full or minibatch) least-squares gradient
/// there, upsamples it, steps, applies the denoiser mixing, and
/// extrapolates. The iteration counter and momentum run continuously
/// across stages.
#[allow(clippy::too_many_arguments)]
pub fn pnp_ms2g(
    b: &Sinogram,
    g: &FanBeamGeometry,
    stages: &[StagePlan],
    denoiser: &DenoiserSpec,
    alpha: f64,
    x0: &Image,
    seed: u64,
    reference: Option<&Image>,
) -> Result<(Image, Trajectory)> {
    pnp_ms2g_with(
        b,
        g,
        stages,
        denoiser,
        alpha,
        x0,
        seed,
        reference,
        &CostModel::default(),
        &mut |_| {},
    )
}

/// [`pnp_ms2g`] with an explicit cost model and a per-iteration observer.
#[allow(clippy::too_many_arguments)]
pub fn pnp_ms2g_with(
    b: &Sinogram,
    g: &FanBeamGeometry,
    stages: &[StagePlan],
    denoiser: &DenoiserSpec,
    alpha: f64,
    x0: &Image,
    seed: u64,
    reference: Option<&Image>,
    cost: &CostModel,
    observer: &mut dyn FnMut(&SolverState),
) -> Result<(Image, Trajectory)> {
    if !g.grid.matches_image(x0) {
        return Err(Error::Config("x0 does not match the geometry grid".into()));
    }
    let prepared = prepare_stages(g, stages)?;
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut trajectory = Trajectory::default();
    let mut x = x0.clone();
    let mut y = x0.clone();
    let mut cost_units = 0.0;
    let mut i = 0usize;

    for (k, stage) in prepared.iter().enumerate() {
        let stage_no = k + 1;
        let iter_cost = 2.0 * cost.projection_units(stage.factor) * stage.view_fraction
            + cost.resample_units;
        for _ in 0..stage.n_iters {
            i += 1;
            let v = downsample(&y, &stage.resample)?;
            let (coarse_grad, fidelity) = match stage.option {
                GradientOption::Deterministic => {
                    ls_gradient_with_fidelity(&v, b, &stage.coarse)?
                }
                GradientOption::Minibatch { views } => {
                    let subset = sample_minibatch(g.n_views(), views, &mut rng)?;
                    stochastic_gradient_with_fidelity(&v, b, &stage.coarse, &subset)?
                }
            };
            let grad = upsample(&coarse_grad, &stage.resample)?;
            let z = y.axpy(-stage.step, &grad);
            check_finite(&z, stage_no, i)?;
            let x_next = red_pro_mix(&z, denoiser, alpha)?;
            check_finite(&x_next, stage_no, i)?;
            let a_i = momentum_coeff(i);
            y = x_next.axpy(a_i, &x_next.axpy(-1.0, &x));
            let x_prev = std::mem::replace(&mut x, x_next);
            cost_units += iter_cost;

            trajectory.records.push(TrajectoryRecord {
                iter: i,
                stage: stage_no,
                psnr_db: record_psnr(&x, reference),
                data_fidelity: fidelity,
                cost_units,
                wall_seconds: start.elapsed().as_secs_f64(),
                momentum: a_i,
            });
            observer(&SolverState {
                x: x.clone(),
                x_prev,
                y: y.clone(),
                iter: i,
                stage: stage_no,
                cost_units,
            });
        }
    }
    Ok((x, trajectory))
}
