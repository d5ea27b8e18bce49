//! Fan-beam CT reconstruction with plug-and-play priors and multi-stage
//! sketched gradients.
//!
//! The toolbox pairs a matrix-free fan-beam projector with two
//! plug-and-play solvers: a PnP-FISTA baseline that takes full-resolution
//! gradient steps, and PnP-MS2G, which approximates those gradients on a
//! schedule of coarser grids (downsample, coarse-grid gradient, upsample)
//! to cut the dominant projection cost while matching the baseline's
//! reconstruction quality. An experiment harness simulates Poisson CT
//! measurements for three standard acquisition setups (sparse-view,
//! low-dose, limited-angle) and records quality-versus-cost trajectories.
//!
//! Organization:
//!
//! - [`operators`] — projector, adjoint, least-squares gradients,
//!   spectral-norm estimation, cost accounting;
//! - [`sketch`] — bicubic down/upsampling and coarse-grid geometries;
//! - [`denoise`] — identity / Gaussian / TV-prox denoisers and the
//!   RED-PRO mixing step;
//! - [`solvers`] — the two iteration engines plus minibatch sampling;
//! - [`simulate`] — phantoms, Poisson measurement simulation, standard
//!   geometry presets;
//! - [`config`], [`experiment`], [`metrics`] — harness: configuration,
//!   orchestration and artifacts, PSNR.

pub mod config;
pub mod denoise;
pub mod error;
pub mod experiment;
pub mod geometry;
pub mod image;
pub mod metrics;
pub mod operators;
pub mod simulate;
pub mod sketch;
pub mod solvers;

pub use config::{ExperimentConfig, GeometrySource, SolverChoice};
pub use denoise::{red_pro_mix, DenoiserKind, DenoiserSpec};
pub use error::{Error, Result};
pub use experiment::{compare_runs, load_run_artifacts, run_experiment, RunArtifacts};
pub use geometry::{FanBeamGeometry, GridSpec};
pub use image::{Image, Sinogram};
pub use metrics::psnr;
pub use operators::{
    backproject, ls_gradient, project, spectral_norm_sq, CostModel, SpectralEstimate,
};
pub use simulate::{
    make_phantom, simulate_measurements, standard_geometries, GeometryPreset, NoiseSpec,
    PhantomKind, PhantomSpec,
};
pub use sketch::{downsample, make_sketched_geometry, upsample, ResampleSpec, SketchedGeometry};
pub use solvers::{
    momentum_coeff, pnp_fista, pnp_ms2g, sample_minibatch, stochastic_gradient, GradientOption,
    SolverState, StagePlan, StepSize, Trajectory,
};
