//! Experiment configuration: a strict sectioned key-value text format.
//!
//! The file format is line-based: `[section]` headers, `key = value`
//! entries, `#` comments, blank lines. Unknown sections or keys are
//! errors so typos fail loudly instead of silently running defaults.
//! [`ExperimentConfig::to_text`] writes every field explicitly, so a
//! snapshot parses back to a field-for-field equal configuration.

use std::collections::BTreeMap;
use std::path::PathBuf;

use crate::denoise::{DenoiserKind, DenoiserSpec};
use crate::error::{Error, Result};
use crate::geometry::{covering_detector_span, FanBeamGeometry, GridSpec};
use crate::operators::CostModel;
use crate::simulate::{GeometryPreset, NoiseSpec, PhantomKind, PhantomSpec, DOMAIN_SIDE};
use crate::solvers::{default_stage_plans, GradientOption, StagePlan, StepSize};

/// Default TV-prox weight for the standard experiments.
pub const DEFAULT_TV_STRENGTH: f64 = 2e-4;

/// Default iteration budget shared by both solvers.
pub const DEFAULT_ITERATIONS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverChoice {
    PnpFista,
    PnpMs2g,
}

impl SolverChoice {
    pub fn name(&self) -> &'static str {
        match self {
            SolverChoice::PnpFista => "pnp_fista",
            SolverChoice::PnpMs2g => "pnp_ms2g",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "pnp_fista" => Ok(SolverChoice::PnpFista),
            "pnp_ms2g" => Ok(SolverChoice::PnpMs2g),
            other => Err(Error::Config(format!("unknown solver `{other}`"))),
        }
    }
}

/// Acquisition geometry written out field by field instead of named by
/// preset.
#[derive(Debug, Clone, PartialEq)]
pub struct ExplicitGeometry {
    pub n_views: usize,
    pub arc_degrees: f64,
    pub n_bins: usize,
    pub source_radius: f64,
    pub detector_radius: f64,
    /// `None` sizes the detector to cover the image circle.
    pub detector_span: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometrySource {
    Preset(GeometryPreset),
    Explicit(ExplicitGeometry),
}

/// Everything one reconstruction run needs, seeds included.
#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub geometry: GeometrySource,
    /// Grid side in pixels.
    pub size: usize,
    pub solver: SolverChoice,
    pub alpha: f64,
    /// Iteration budget for the baseline solver (the sketched solver's
    /// budget is the sum of its stage iterations).
    pub iterations: usize,
    pub step: StepSize,
    /// Solver seed (minibatch sampling).
    pub seed: u64,
    /// Start from a scaled backprojection instead of zeros.
    pub warm_start: bool,
    /// Write zeros into the trajectory CSV wall-clock column so repeated
    /// runs produce byte-identical artifacts.
    pub deterministic_timing: bool,
    pub resample_cost_units: f64,
    pub output: Option<PathBuf>,
    pub phantom_kind: PhantomKind,
    pub phantom_randomize: bool,
    pub phantom_seed: u64,
    pub noise_i0: f64,
    pub noise_seed: u64,
    pub denoiser: DenoiserSpec,
    pub stages: Vec<StagePlan>,
}

impl ExperimentConfig {
    /// Standard-experiment defaults for a preset and solver choice.
    pub fn preset_default(preset: GeometryPreset, solver: SolverChoice) -> Self {
        let stages = match solver {
            SolverChoice::PnpMs2g => default_stage_plans(DEFAULT_ITERATIONS),
            SolverChoice::PnpFista => Vec::new(),
        };
        Self {
            geometry: GeometrySource::Preset(preset),
            size: 256,
            solver,
            alpha: 1.0,
            iterations: DEFAULT_ITERATIONS,
            step: StepSize::Auto,
            seed: 42,
            warm_start: false,
            deterministic_timing: false,
            resample_cost_units: CostModel::default().resample_units,
            output: None,
            phantom_kind: PhantomKind::Disks,
            phantom_randomize: false,
            phantom_seed: 7,
            noise_i0: preset.default_i0(),
            noise_seed: 1234,
            denoiser: DenoiserSpec::tv_prox(DEFAULT_TV_STRENGTH),
            stages,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 16 || !self.size.is_multiple_of(16) {
            return Err(Error::Config(format!(
                "grid size must be >= 16 and divisible by 16, got {}",
                self.size
            )));
        }
        if self.alpha.is_nan() || self.alpha <= 0.0 || self.alpha > 1.0 {
            return Err(Error::Config(format!(
                "alpha must lie in (0, 1], got {}",
                self.alpha
            )));
        }
        if self.iterations == 0 {
            return Err(Error::Config("iteration budget must be >= 1".into()));
        }
        if self.noise_i0.is_nan() || self.noise_i0 <= 0.0 || !self.noise_i0.is_finite() {
            return Err(Error::Config(format!(
                "noise i0 must be positive, got {}",
                self.noise_i0
            )));
        }
        if self.resample_cost_units < 0.0 {
            return Err(Error::Config("resample_cost_units must be >= 0".into()));
        }
        if let StepSize::Fixed(s) = self.step {
            if s.is_nan() || s <= 0.0 || !s.is_finite() {
                return Err(Error::Config(format!("step must be positive, got {s}")));
            }
        }
        if matches!(self.solver, SolverChoice::PnpMs2g) && self.stages.is_empty() {
            return Err(Error::Config(
                "pnp_ms2g needs at least one [stage.N] section".into(),
            ));
        }
        let n_views = match &self.geometry {
            GeometrySource::Preset(p) => p.n_views(),
            GeometrySource::Explicit(e) => e.n_views,
        };
        for (k, stage) in self.stages.iter().enumerate() {
            if stage.factor == 0 || !self.size.is_multiple_of(stage.factor) {
                return Err(Error::Config(format!(
                    "stage {} factor {} does not divide grid size {}",
                    k + 1,
                    stage.factor,
                    self.size
                )));
            }
            if stage.n_iters == 0 {
                return Err(Error::Config(format!("stage {} has zero iterations", k + 1)));
            }
            if let GradientOption::Minibatch { views } = stage.option {
                if views == 0 || views > n_views {
                    return Err(Error::Config(format!(
                        "stage {} minibatch_views {views} out of range 1..={n_views}",
                        k + 1
                    )));
                }
            }
        }
        // Surface denoiser parameter problems at config time.
        if self.denoiser.strength.is_nan() || self.denoiser.strength < 0.0 {
            return Err(Error::Config("denoiser strength must be >= 0".into()));
        }
        if self.denoiser.inner_iters == 0 {
            return Err(Error::Config("denoiser inner_iters must be >= 1".into()));
        }
        self.build_geometry().map(|_| ())
    }

    /// Resolve the acquisition geometry at this config's grid size.
    pub fn build_geometry(&self) -> Result<FanBeamGeometry> {
        match &self.geometry {
            GeometrySource::Preset(p) => p.build(self.size),
            GeometrySource::Explicit(e) => {
                let grid = GridSpec::square(self.size, DOMAIN_SIDE / self.size as f64);
                let span = match e.detector_span {
                    Some(s) => s,
                    None => covering_detector_span(e.source_radius, e.detector_radius, &grid)?,
                };
                let angles = (0..e.n_views)
                    .map(|v| e.arc_degrees * v as f64 / e.n_views as f64)
                    .collect();
                FanBeamGeometry::new(
                    angles,
                    e.n_bins,
                    e.source_radius,
                    e.detector_radius,
                    span,
                    grid,
                )
            }
        }
    }

    pub fn phantom_spec(&self) -> PhantomSpec {
        PhantomSpec {
            kind: self.phantom_kind,
            size: self.size,
            randomize: self.phantom_randomize,
            seed: self.phantom_seed,
        }
    }

    pub fn noise_spec(&self) -> NoiseSpec {
        NoiseSpec {
            i0: self.noise_i0,
            seed: self.noise_seed,
        }
    }

    pub fn cost_model(&self) -> CostModel {
        CostModel {
            units_per_full_projection: 1.0,
            resample_units: self.resample_cost_units,
        }
    }

    /// Canonical serialization; every field is written explicitly.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str("[experiment]\n");
        match &self.geometry {
            GeometrySource::Preset(p) => out.push_str(&format!("preset = {}\n", p.name())),
            GeometrySource::Explicit(_) => {}
        }
        out.push_str(&format!("size = {}\n", self.size));
        out.push_str(&format!("solver = {}\n", self.solver.name()));
        out.push_str(&format!("alpha = {}\n", self.alpha));
        out.push_str(&format!("iterations = {}\n", self.iterations));
        match self.step {
            StepSize::Auto => out.push_str("step = auto\n"),
            StepSize::Fixed(s) => out.push_str(&format!("step = {s}\n")),
        }
        out.push_str(&format!("seed = {}\n", self.seed));
        out.push_str(&format!("warm_start = {}\n", self.warm_start));
        out.push_str(&format!("deterministic_timing = {}\n", self.deterministic_timing));
        out.push_str(&format!("resample_cost_units = {}\n", self.resample_cost_units));
        if let Some(dir) = &self.output {
            out.push_str(&format!("output = {}\n", dir.display()));
        }
        if let GeometrySource::Explicit(e) = &self.geometry {
            out.push_str("\n[geometry]\n");
            out.push_str(&format!("n_views = {}\n", e.n_views));
            out.push_str(&format!("arc_degrees = {}\n", e.arc_degrees));
            out.push_str(&format!("n_bins = {}\n", e.n_bins));
            out.push_str(&format!("source_radius = {}\n", e.source_radius));
            out.push_str(&format!("detector_radius = {}\n", e.detector_radius));
            match e.detector_span {
                Some(s) => out.push_str(&format!("detector_span = {s}\n")),
                None => out.push_str("detector_span = auto\n"),
            }
        }
        out.push_str("\n[phantom]\n");
        out.push_str(&format!("kind = {}\n", self.phantom_kind.name()));
        out.push_str(&format!(
            "placement = {}\n",
            if self.phantom_randomize { "random" } else { "fixed" }
        ));
        out.push_str(&format!("seed = {}\n", self.phantom_seed));
        out.push_str("\n[noise]\n");
        out.push_str(&format!("i0 = {}\n", self.noise_i0));
        out.push_str(&format!("seed = {}\n", self.noise_seed));
        out.push_str("\n[denoiser]\n");
        out.push_str(&format!("kind = {}\n", self.denoiser.kind.name()));
        out.push_str(&format!("strength = {}\n", self.denoiser.strength));
        out.push_str(&format!("inner_iters = {}\n", self.denoiser.inner_iters));
        out.push_str(&format!("tol = {}\n", self.denoiser.tol));
        for (k, stage) in self.stages.iter().enumerate() {
            out.push_str(&format!("\n[stage.{}]\n", k + 1));
            out.push_str(&format!("factor = {}\n", stage.factor));
            out.push_str(&format!("iters = {}\n", stage.n_iters));
            match stage.step_size {
                StepSize::Auto => out.push_str("step = auto\n"),
                StepSize::Fixed(s) => out.push_str(&format!("step = {s}\n")),
            }
            match stage.option {
                GradientOption::Deterministic => out.push_str("option = deterministic\n"),
                GradientOption::Minibatch { views } => {
                    out.push_str("option = minibatch\n");
                    out.push_str(&format!("minibatch_views = {views}\n"));
                }
            }
        }
        out
    }

    /// Parse the sectioned key-value format. Unknown sections, unknown
    /// keys, duplicates, and malformed values are all configuration
    /// errors.
    pub fn from_text(text: &str) -> Result<Self> {
        let mut sections = parse_sections(text)?;

        let mut experiment = sections.remove("experiment").unwrap_or_default();
        let geometry_section = sections.remove("geometry");
        let preset_name = take_opt(&mut experiment, "preset")?;
        if preset_name.is_some() && geometry_section.is_some() {
            return Err(Error::Config(
                "`preset` and a [geometry] section are mutually exclusive".into(),
            ));
        }
        let preset = match &preset_name {
            Some(name) => GeometryPreset::from_name(name)?,
            None => GeometryPreset::SparseView,
        };
        let geometry = match geometry_section {
            Some(mut sec) => {
                let g = ExplicitGeometry {
                    n_views: take_parse(&mut sec, "geometry", "n_views", 90)?,
                    arc_degrees: take_parse(&mut sec, "geometry", "arc_degrees", 360.0)?,
                    n_bins: take_parse(&mut sec, "geometry", "n_bins", 228)?,
                    source_radius: take_parse(&mut sec, "geometry", "source_radius", 3.0)?,
                    detector_radius: take_parse(&mut sec, "geometry", "detector_radius", 3.0)?,
                    detector_span: match take_opt(&mut sec, "detector_span")? {
                        None => None,
                        Some(v) if v == "auto" => None,
                        Some(v) => Some(parse_value("geometry", "detector_span", &v)?),
                    },
                };
                reject_leftovers("geometry", &sec)?;
                GeometrySource::Explicit(g)
            }
            None => GeometrySource::Preset(preset),
        };

        let size = take_parse(&mut experiment, "experiment", "size", 256usize)?;
        let solver = match take_opt(&mut experiment, "solver")? {
            Some(v) => SolverChoice::from_name(&v)?,
            None => SolverChoice::PnpMs2g,
        };
        let alpha = take_parse(&mut experiment, "experiment", "alpha", 1.0)?;
        let iterations =
            take_parse(&mut experiment, "experiment", "iterations", DEFAULT_ITERATIONS)?;
        let step = match take_opt(&mut experiment, "step")? {
            None => StepSize::Auto,
            Some(v) if v == "auto" => StepSize::Auto,
            Some(v) => StepSize::Fixed(parse_value("experiment", "step", &v)?),
        };
        let seed = take_parse(&mut experiment, "experiment", "seed", 42u64)?;
        let warm_start = take_bool(&mut experiment, "experiment", "warm_start", false)?;
        let deterministic_timing =
            take_bool(&mut experiment, "experiment", "deterministic_timing", false)?;
        let resample_cost_units = take_parse(
            &mut experiment,
            "experiment",
            "resample_cost_units",
            CostModel::default().resample_units,
        )?;
        let output = take_opt(&mut experiment, "output")?.map(PathBuf::from);
        reject_leftovers("experiment", &experiment)?;

        let mut phantom = sections.remove("phantom").unwrap_or_default();
        let phantom_kind = match take_opt(&mut phantom, "kind")? {
            Some(v) => PhantomKind::from_name(&v)?,
            None => PhantomKind::Disks,
        };
        let phantom_randomize = match take_opt(&mut phantom, "placement")? {
            None => false,
            Some(v) if v == "fixed" => false,
            Some(v) if v == "random" => true,
            Some(v) => {
                return Err(Error::Config(format!(
                    "phantom placement must be `fixed` or `random`, got `{v}`"
                )))
            }
        };
        let phantom_seed = take_parse(&mut phantom, "phantom", "seed", 7u64)?;
        reject_leftovers("phantom", &phantom)?;

        let mut noise = sections.remove("noise").unwrap_or_default();
        let default_i0 = match &geometry {
            GeometrySource::Preset(p) => p.default_i0(),
            GeometrySource::Explicit(_) => GeometryPreset::SparseView.default_i0(),
        };
        let noise_i0 = take_parse(&mut noise, "noise", "i0", default_i0)?;
        let noise_seed = take_parse(&mut noise, "noise", "seed", 1234u64)?;
        reject_leftovers("noise", &noise)?;

        let mut den = sections.remove("denoiser").unwrap_or_default();
        let den_kind = match take_opt(&mut den, "kind")? {
            Some(v) => DenoiserKind::from_name(&v)?,
            None => DenoiserKind::TvProx,
        };
        let default_strength = match den_kind {
            DenoiserKind::TvProx => DEFAULT_TV_STRENGTH,
            _ => 0.0,
        };
        let denoiser = DenoiserSpec {
            kind: den_kind,
            strength: take_parse(&mut den, "denoiser", "strength", default_strength)?,
            inner_iters: take_parse(
                &mut den,
                "denoiser",
                "inner_iters",
                DenoiserSpec::tv_prox(0.0).inner_iters,
            )?,
            tol: take_parse(&mut den, "denoiser", "tol", DenoiserSpec::tv_prox(0.0).tol)?,
        };
        reject_leftovers("denoiser", &den)?;

        // Stage sections must be stage.1 .. stage.K with no gaps.
        let mut stages = Vec::new();
        loop {
            let name = format!("stage.{}", stages.len() + 1);
            let Some(mut sec) = sections.remove(&name) else {
                break;
            };
            let factor = take_parse(&mut sec, &name, "factor", 1usize)?;
            let n_iters = take_parse(&mut sec, &name, "iters", 1usize)?;
            let step_size = match take_opt(&mut sec, "step")? {
                None => StepSize::Auto,
                Some(v) if v == "auto" => StepSize::Auto,
                Some(v) => StepSize::Fixed(parse_value(&name, "step", &v)?),
            };
            let option = match take_opt(&mut sec, "option")? {
                None => GradientOption::Deterministic,
                Some(v) if v == "deterministic" => GradientOption::Deterministic,
                Some(v) if v == "minibatch" => GradientOption::Minibatch {
                    views: take_parse(&mut sec, &name, "minibatch_views", 1usize)?,
                },
                Some(v) => {
                    return Err(Error::Config(format!(
                        "stage option must be `deterministic` or `minibatch`, got `{v}`"
                    )))
                }
            };
            reject_leftovers(&name, &sec)?;
            stages.push(StagePlan {
                factor,
                n_iters,
                step_size,
                option,
            });
        }
        if let Some(stray) = sections.keys().find(|k| k.starts_with("stage.")) {
            return Err(Error::Config(format!(
                "stage sections must be numbered consecutively from 1; found [{stray}]"
            )));
        }
        if let Some(unknown) = sections.keys().next() {
            return Err(Error::Config(format!("unknown section [{unknown}]")));
        }
        if stages.is_empty() && matches!(solver, SolverChoice::PnpMs2g) {
            stages = default_stage_plans(iterations);
        }

        Ok(ExperimentConfig {
            geometry,
            size,
            solver,
            alpha,
            iterations,
            step,
            seed,
            warm_start,
            deterministic_timing,
            resample_cost_units,
            output,
            phantom_kind,
            phantom_randomize,
            phantom_seed,
            noise_i0,
            noise_seed,
            denoiser,
            stages,
        })
    }
}

type Section = BTreeMap<String, String>;

fn parse_sections(text: &str) -> Result<BTreeMap<String, Section>> {
    let mut sections: BTreeMap<String, Section> = BTreeMap::new();
    let mut current: Option<String> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if let Some(name) = line.strip_prefix('[').and_then(|s| s.strip_suffix(']')) {
            let name = name.trim().to_string();
            if sections.contains_key(&name) {
                return Err(Error::Config(format!(
                    "line {}: duplicate section [{name}]",
                    lineno + 1
                )));
            }
            sections.insert(name.clone(), Section::new());
            current = Some(name);
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(Error::Config(format!(
                "line {}: expected `key = value`, got `{line}`",
                lineno + 1
            )));
        };
        let section = current.as_ref().ok_or_else(|| {
            Error::Config(format!("line {}: entry before any [section]", lineno + 1))
        })?;
        let key = key.trim().to_string();
        let value = value.trim().to_string();
        let entries = sections.get_mut(section).expect("section exists");
        if entries.insert(key.clone(), value).is_some() {
            return Err(Error::Config(format!(
                "line {}: duplicate key `{key}` in [{section}]",
                lineno + 1
            )));
        }
    }
    Ok(sections)
}

fn take_opt(section: &mut Section, key: &str) -> Result<Option<String>> {
    Ok(section.remove(key))
}

fn parse_value<T: std::str::FromStr>(section: &str, key: &str, value: &str) -> Result<T> {
    value.parse().map_err(|_| {
        Error::Config(format!("invalid value `{value}` for `{key}` in [{section}]"))
    })
}

fn take_parse<T: std::str::FromStr>(
    section: &mut Section,
    section_name: &str,
    key: &str,
    default: T,
) -> Result<T> {
    match section.remove(key) {
        Some(v) => parse_value(section_name, key, &v),
        None => Ok(default),
    }
}

fn take_bool(section: &mut Section, section_name: &str, key: &str, default: bool) -> Result<bool> {
    match section.remove(key) {
        None => Ok(default),
        Some(v) => match v.as_str() {
            "true" => Ok(true),
            "false" => Ok(false),
            other => Err(Error::Config(format!(
                "`{key}` in [{section_name}] must be true or false, got `{other}`"
            ))),
        },
    }
}

fn reject_leftovers(section: &str, entries: &Section) -> Result<()> {
    if let Some(key) = entries.keys().next() {
        return Err(Error::Config(format!("unknown key `{key}` in [{section}]")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn snapshot_round_trips_field_for_field() {
        let mut cfg =
            ExperimentConfig::preset_default(GeometryPreset::LowDose, SolverChoice::PnpMs2g);
        cfg.stages.push(StagePlan {
            factor: 2,
            n_iters: 11,
            step_size: StepSize::Fixed(0.0123),
            option: GradientOption::Minibatch { views: 45 },
        });
        cfg.output = Some(PathBuf::from("runs/low_dose"));
        cfg.deterministic_timing = true;
        let text = cfg.to_text();
        let parsed = ExperimentConfig::from_text(&text).unwrap();
        assert_eq!(parsed, cfg);
    }

    #[test]
    fn explicit_geometry_round_trips() {
        let mut cfg =
            ExperimentConfig::preset_default(GeometryPreset::SparseView, SolverChoice::PnpFista);
        cfg.geometry = GeometrySource::Explicit(ExplicitGeometry {
            n_views: 30,
            arc_degrees: 200.0,
            n_bins: 64,
            source_radius: 3.5,
            detector_radius: 2.5,
            detector_span: None,
        });
        let parsed = ExperimentConfig::from_text(&cfg.to_text()).unwrap();
        assert_eq!(parsed, cfg);
        assert!(parsed.build_geometry().is_ok());
    }

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = ExperimentConfig::from_text("[experiment]\npreset = low_dose\n").unwrap();
        assert_eq!(cfg.size, 256);
        assert_eq!(cfg.solver, SolverChoice::PnpMs2g);
        assert_eq!(cfg.noise_i0, GeometryPreset::LowDose.default_i0());
        assert_eq!(cfg.stages.len(), 2);
        assert_eq!(cfg.stages[0].factor, 4);
        assert_eq!(cfg.stages[1].factor, 2);
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn unknown_keys_and_sections_are_errors() {
        assert!(ExperimentConfig::from_text("[experiment]\nsiez = 64\n").is_err());
        assert!(ExperimentConfig::from_text("[experiments]\nsize = 64\n").is_err());
        assert!(ExperimentConfig::from_text("[stage.2]\nfactor = 2\n").is_err());
        assert!(ExperimentConfig::from_text("[experiment]\nsize = 64\nsize = 32\n").is_err());
        assert!(ExperimentConfig::from_text("size = 64\n").is_err());
        assert!(ExperimentConfig::from_text("[experiment]\nsize\n").is_err());
    }

    #[test]
    fn preset_and_explicit_geometry_conflict() {
        let text = "[experiment]\npreset = sparse_view\n[geometry]\nn_views = 10\n";
        assert!(ExperimentConfig::from_text(text).is_err());
    }

    #[test]
    fn stage_sections_parse_in_order() {
        let text = "\
[experiment]
solver = pnp_ms2g
size = 64

[stage.1]
factor = 4
iters = 10

[stage.2]
factor = 2
iters = 5
option = minibatch
minibatch_views = 30
";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.stages.len(), 2);
        assert_eq!(cfg.stages[0], StagePlan::deterministic(4, 10));
        assert_eq!(
            cfg.stages[1].option,
            GradientOption::Minibatch { views: 30 }
        );
        assert!(cfg.validate().is_ok());
    }

    #[test]
    fn validation_catches_bad_settings() {
        let base =
            ExperimentConfig::preset_default(GeometryPreset::SparseView, SolverChoice::PnpMs2g);

        let mut cfg = base.clone();
        cfg.size = 100;
        assert!(cfg.validate().is_err());

        let mut cfg = base.clone();
        cfg.alpha = 0.0;
        assert!(cfg.validate().is_err());

        let mut cfg = base.clone();
        cfg.stages[0].factor = 3;
        assert!(cfg.validate().is_err());

        let mut cfg = base.clone();
        cfg.stages = vec![StagePlan::minibatch(2, 5, 500)];
        assert!(cfg.validate().is_err());

        let mut cfg = base.clone();
        cfg.noise_i0 = -1.0;
        assert!(cfg.validate().is_err());

        let mut cfg = base;
        cfg.stages.clear();
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn comments_and_blank_lines_ignored() {
        let text = "\
# top comment
[experiment]

# mid comment
size = 64
solver = pnp_fista
";
        let cfg = ExperimentConfig::from_text(text).unwrap();
        assert_eq!(cfg.size, 64);
        assert_eq!(cfg.solver, SolverChoice::PnpFista);
    }
}
