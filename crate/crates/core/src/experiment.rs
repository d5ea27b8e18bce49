//! Experiment orchestration and run artifacts.
//!
//! `run_experiment` wires the pipeline together: phantom, simulated
//! measurements, solver, metrics, and persistence. Each run writes into
//! its own directory:
//!
//! - `reconstruction.img` — raw 64-bit floats behind a 16-byte header
//!   (8-byte magic, u32 width, u32 height, little-endian), lossless;
//! - `reconstruction.pgm` — 8-bit greyscale preview, linearly scaled;
//! - `trajectory.csv` — one row per iteration under the stable schema;
//! - `config.cfg` — snapshot that parses back to an equal config;
//! - `summary.txt` — final PSNR, total cost units, wall time.
//!
//! All randomness comes from the config seeds, so a rerun reproduces
//! every artifact byte except measured wall time (which the
//! `deterministic_timing` flag zeroes out in the CSV).

use std::fmt;
use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use crate::config::{ExperimentConfig, SolverChoice};
use crate::error::{Error, Result};
use crate::image::Image;
use crate::metrics::psnr;
use crate::operators::{backproject, project};
use crate::simulate::{make_phantom, simulate_measurements};
use crate::solvers::{
    auto_step_size, pnp_fista_with, pnp_ms2g_with, momentum_coeff, StepSize, Trajectory,
    TrajectoryRecord, TRAJECTORY_CSV_HEADER,
};

const IMAGE_MAGIC: &[u8; 8] = b"TSKIMG1\0";

/// Final scores of one run, as persisted in `summary.txt`.
#[derive(Debug, Clone, PartialEq)]
pub struct RunSummary {
    pub solver: String,
    pub iterations: usize,
    pub final_psnr_db: f64,
    pub total_cost_units: f64,
    pub wall_seconds: f64,
}

/// Paths and parsed contents of a completed run.
#[derive(Debug, Clone)]
pub struct RunArtifacts {
    pub dir: PathBuf,
    pub image_path: PathBuf,
    pub preview_path: PathBuf,
    pub trajectory_path: PathBuf,
    pub config_path: PathBuf,
    pub summary_path: PathBuf,
    pub config: ExperimentConfig,
    pub summary: RunSummary,
    pub trajectory: Trajectory,
}

/// Execute one configured experiment and persist its artifacts into
/// `config.output`.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunArtifacts> {
    config.validate()?;
    let dir = config
        .output
        .clone()
        .ok_or_else(|| Error::Config("config has no output directory".into()))?;
    fs::create_dir_all(&dir)?;

    let geometry = config.build_geometry()?;
    let phantom = make_phantom(&config.phantom_spec())?;
    let measurements = simulate_measurements(&phantom, &geometry, &config.noise_spec())?;

    let x0 = if config.warm_start {
        // Backprojection scaled to the least-squares optimum along its
        // own direction.
        let atb = backproject(&measurements, &geometry)?;
        let a_atb = project(&atb, &geometry)?;
        let denom = a_atb.dot(&a_atb);
        let scale = if denom > 0.0 {
            a_atb.dot(&measurements) / denom
        } else {
            0.0
        };
        atb.scaled(scale)
    } else {
        Image::zeros(geometry.grid.width, geometry.grid.height, geometry.grid.pixel_size)
    };

    let cost_model = config.cost_model();
    let started = Instant::now();
    let (reconstruction, trajectory) = match config.solver {
        SolverChoice::PnpFista => {
            let step = match config.step {
                StepSize::Fixed(s) => s,
                StepSize::Auto => auto_step_size(&geometry),
            };
            pnp_fista_with(
                &measurements,
                &geometry,
                &config.denoiser,
                config.alpha,
                config.iterations,
                step,
                &x0,
                Some(&phantom),
                &cost_model,
                &mut |_| {},
            )?
        }
        SolverChoice::PnpMs2g => pnp_ms2g_with(
            &measurements,
            &geometry,
            &config.stages,
            &config.denoiser,
            config.alpha,
            &x0,
            config.seed,
            Some(&phantom),
            &cost_model,
            &mut |_| {},
        )?,
    };
    let wall_seconds = started.elapsed().as_secs_f64();

    let final_psnr_db = psnr(
        &reconstruction,
        &phantom,
        phantom.max_value().max(f64::MIN_POSITIVE),
    )?;
    let summary = RunSummary {
        solver: config.solver.name().to_string(),
        iterations: trajectory.len(),
        final_psnr_db,
        total_cost_units: trajectory.final_cost_units(),
        wall_seconds,
    };

    let image_path = dir.join("reconstruction.img");
    let preview_path = dir.join("reconstruction.pgm");
    let trajectory_path = dir.join("trajectory.csv");
    let config_path = dir.join("config.cfg");
    let summary_path = dir.join("summary.txt");

    write_image(&image_path, &reconstruction)?;
    write_pgm(&preview_path, &reconstruction)?;
    fs::write(&trajectory_path, trajectory.to_csv(config.deterministic_timing))?;
    fs::write(&config_path, config.to_text())?;
    fs::write(&summary_path, summary_to_text(&summary))?;

    Ok(RunArtifacts {
        dir,
        image_path,
        preview_path,
        trajectory_path,
        config_path,
        summary_path,
        config: config.clone(),
        summary,
        trajectory,
    })
}

fn summary_to_text(s: &RunSummary) -> String {
    format!(
        "solver = {}\niterations = {}\nfinal_psnr_db = {}\ntotal_cost_units = {}\nwall_seconds = {}\n",
        s.solver, s.iterations, s.final_psnr_db, s.total_cost_units, s.wall_seconds
    )
}

fn summary_from_text(text: &str) -> Result<RunSummary> {
    let mut solver = None;
    let mut iterations = None;
    let mut final_psnr_db = None;
    let mut total_cost_units = None;
    let mut wall_seconds = None;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| Error::Input(format!("malformed summary line `{line}`")))?;
        let value = value.trim();
        match key.trim() {
            "solver" => solver = Some(value.to_string()),
            "iterations" => iterations = value.parse().ok(),
            "final_psnr_db" => final_psnr_db = value.parse().ok(),
            "total_cost_units" => total_cost_units = value.parse().ok(),
            "wall_seconds" => wall_seconds = value.parse().ok(),
            other => return Err(Error::Input(format!("unknown summary key `{other}`"))),
        }
    }
    Ok(RunSummary {
        solver: solver.ok_or_else(|| Error::Input("summary missing solver".into()))?,
        iterations: iterations.ok_or_else(|| Error::Input("summary missing iterations".into()))?,
        final_psnr_db: final_psnr_db
            .ok_or_else(|| Error::Input("summary missing final_psnr_db".into()))?,
        total_cost_units: total_cost_units
            .ok_or_else(|| Error::Input("summary missing total_cost_units".into()))?,
        wall_seconds: wall_seconds
            .ok_or_else(|| Error::Input("summary missing wall_seconds".into()))?,
    })
}

/// Write the lossless binary image format.
pub fn write_image(path: &Path, image: &Image) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(IMAGE_MAGIC)?;
    f.write_all(&(image.width() as u32).to_le_bytes())?;
    f.write_all(&(image.height() as u32).to_le_bytes())?;
    let mut bytes = Vec::with_capacity(image.len() * 8);
    for v in image.data() {
        bytes.extend_from_slice(&v.to_le_bytes());
    }
    f.write_all(&bytes)?;
    Ok(())
}

/// Read the binary image format back; `pixel_size` is not stored in the
/// header, so the caller supplies it.
pub fn read_image(path: &Path, pixel_size: f64) -> Result<Image> {
    let mut f = fs::File::open(path)?;
    let mut header = [0u8; 16];
    f.read_exact(&mut header)?;
    if &header[..8] != IMAGE_MAGIC {
        return Err(Error::Input(format!(
            "{} is not an image file (bad magic)",
            path.display()
        )));
    }
    let width = u32::from_le_bytes(header[8..12].try_into().unwrap()) as usize;
    let height = u32::from_le_bytes(header[12..16].try_into().unwrap()) as usize;
    let mut bytes = Vec::new();
    f.read_to_end(&mut bytes)?;
    if bytes.len() != width * height * 8 {
        return Err(Error::Input(format!(
            "{}: expected {} data bytes, found {}",
            path.display(),
            width * height * 8,
            bytes.len()
        )));
    }
    let data = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Image::new(width, height, pixel_size, data)
}

/// 8-bit greyscale preview, linearly mapping [min, max] to [0, 255].
pub fn write_pgm(path: &Path, image: &Image) -> Result<()> {
    let min = image.data().iter().copied().fold(f64::INFINITY, f64::min);
    let max = image.max_value();
    let scale = if max > min { 255.0 / (max - min) } else { 0.0 };
    let mut out = format!("P5\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.extend(
        image
            .data()
            .iter()
            .map(|&v| ((v - min) * scale).round().clamp(0.0, 255.0) as u8),
    );
    fs::write(path, out)?;
    Ok(())
}

fn trajectory_from_csv(text: &str) -> Result<Trajectory> {
    let mut lines = text.lines();
    match lines.next() {
        Some(h) if h == TRAJECTORY_CSV_HEADER => {}
        other => {
            return Err(Error::Input(format!(
                "trajectory CSV has unexpected header {other:?}"
            )))
        }
    }
    let mut records = Vec::new();
    for (n, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(Error::Input(format!(
                "trajectory CSV row {} has {} fields",
                n + 1,
                fields.len()
            )));
        }
        let parse_f = |s: &str| -> Result<f64> {
            s.parse()
                .map_err(|_| Error::Input(format!("bad CSV number `{s}`")))
        };
        let iter: usize = fields[0]
            .parse()
            .map_err(|_| Error::Input(format!("bad CSV iter `{}`", fields[0])))?;
        records.push(TrajectoryRecord {
            iter,
            stage: fields[1]
                .parse()
                .map_err(|_| Error::Input(format!("bad CSV stage `{}`", fields[1])))?,
            psnr_db: parse_f(fields[2])?,
            data_fidelity: parse_f(fields[3])?,
            cost_units: parse_f(fields[4])?,
            wall_seconds: parse_f(fields[5])?,
            momentum: momentum_coeff(iter),
        });
    }
    Ok(Trajectory { records })
}

/// Load a completed run back from its directory.
pub fn load_run_artifacts(dir: &Path) -> Result<RunArtifacts> {
    let config_path = dir.join("config.cfg");
    let trajectory_path = dir.join("trajectory.csv");
    let summary_path = dir.join("summary.txt");
    let config = ExperimentConfig::from_text(&fs::read_to_string(&config_path)?)?;
    let trajectory = trajectory_from_csv(&fs::read_to_string(&trajectory_path)?)?;
    let summary = summary_from_text(&fs::read_to_string(&summary_path)?)?;
    Ok(RunArtifacts {
        dir: dir.to_path_buf(),
        image_path: dir.join("reconstruction.img"),
        preview_path: dir.join("reconstruction.pgm"),
        trajectory_path,
        config_path,
        summary_path,
        config,
        summary,
        trajectory,
    })
}

/// One line of [`ComparisonTable`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonRow {
    pub name: String,
    pub solver: String,
    pub final_psnr_db: f64,
    pub total_cost_units: f64,
    pub wall_seconds: f64,
    /// PSNR interpolated at the shared matched-cost level.
    pub psnr_at_matched_cost: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonTable {
    /// Cost level every run reached: the minimum of the final costs.
    pub matched_cost_units: f64,
    pub rows: Vec<ComparisonRow>,
}

impl fmt::Display for ComparisonTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:<24} {:>10} {:>14} {:>12} {:>12} {:>18}",
            "run", "solver", "final_psnr_db", "cost_units", "wall_s", "psnr_at_matched"
        )?;
        for r in &self.rows {
            writeln!(
                f,
                "{:<24} {:>10} {:>14.3} {:>12.3} {:>12.3} {:>18.3}",
                r.name,
                r.solver,
                r.final_psnr_db,
                r.total_cost_units,
                r.wall_seconds,
                r.psnr_at_matched_cost
            )?;
        }
        write!(f, "matched cost level: {:.3} units", self.matched_cost_units)
    }
}

fn same_problem(a: &ExperimentConfig, b: &ExperimentConfig) -> bool {
    a.geometry == b.geometry
        && a.size == b.size
        && a.phantom_kind == b.phantom_kind
        && a.phantom_randomize == b.phantom_randomize
        && a.phantom_seed == b.phantom_seed
}

/// Tabulate runs that reconstructed the same phantom under the same
/// geometry: final scores plus PSNR at the shared cost level.
pub fn compare_runs(runs: &[RunArtifacts]) -> Result<ComparisonTable> {
    if runs.is_empty() {
        return Err(Error::Input("nothing to compare".into()));
    }
    for r in &runs[1..] {
        if !same_problem(&runs[0].config, &r.config) {
            return Err(Error::Input(format!(
                "runs `{}` and `{}` use different phantoms or geometries",
                runs[0].dir.display(),
                r.dir.display()
            )));
        }
    }
    let matched_cost_units = runs
        .iter()
        .map(|r| r.trajectory.final_cost_units())
        .fold(f64::INFINITY, f64::min);
    let rows = runs
        .iter()
        .map(|r| ComparisonRow {
            name: r
                .dir
                .file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_else(|| r.dir.display().to_string()),
            solver: r.summary.solver.clone(),
            final_psnr_db: r.summary.final_psnr_db,
            total_cost_units: r.summary.total_cost_units,
            wall_seconds: r.summary.wall_seconds,
            psnr_at_matched_cost: r.trajectory.psnr_at_cost(matched_cost_units),
        })
        .collect();
    Ok(ComparisonTable {
        matched_cost_units,
        rows,
    })
}
