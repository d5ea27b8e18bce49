//! Command-line interface for the reconstruction toolbox.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use tomosketch::experiment::{compare_runs, load_run_artifacts, run_experiment};
use tomosketch::geometry::FanBeamGeometry;
use tomosketch::image::{Image, Sinogram};
use tomosketch::operators::{backproject, project};
use tomosketch::simulate::GeometryPreset;
use tomosketch::{Error, ExperimentConfig};

#[derive(Parser)]
#[command(name = "tomosketch", about = "Sketched plug-and-play CT reconstruction")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one configured experiment and write its artifacts.
    Run {
        /// Experiment config file.
        #[arg(long)]
        config: PathBuf,
        /// Output directory (overrides the config's `output`).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Grid side override in pixels.
        #[arg(long)]
        size: Option<usize>,
        /// Solver seed override.
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Tabulate finished runs against each other.
    Compare {
        /// Run directories produced by `run`.
        dirs: Vec<PathBuf>,
    },
    /// List the standard acquisition presets.
    Presets,
    /// Check projector/backprojector adjointness at a given grid size.
    AdjointTest {
        #[arg(long, default_value_t = 64)]
        size: usize,
    },
    /// Print the version.
    Version,
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode, Error> {
    match cli.command {
        Command::Run {
            config,
            out,
            size,
            seed,
        } => {
            let text = std::fs::read_to_string(&config)?;
            let mut cfg = ExperimentConfig::from_text(&text)?;
            if let Some(dir) = out {
                cfg.output = Some(dir);
            }
            if let Some(n) = size {
                cfg.size = n;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            let artifacts = run_experiment(&cfg)?;
            println!(
                "wrote {} ({} iterations, {:.3} cost units, {:.2} dB, {:.2} s)",
                artifacts.dir.display(),
                artifacts.summary.iterations,
                artifacts.summary.total_cost_units,
                artifacts.summary.final_psnr_db,
                artifacts.summary.wall_seconds
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Compare { dirs } => {
            if dirs.is_empty() {
                return Err(Error::Input("compare needs at least one run directory".into()));
            }
            let runs = dirs
                .iter()
                .map(|d| load_run_artifacts(d))
                .collect::<Result<Vec<_>, _>>()?;
            println!("{}", compare_runs(&runs)?);
            Ok(ExitCode::SUCCESS)
        }
        Command::Presets => {
            for (preset, g) in tomosketch::standard_geometries() {
                println!(
                    "{:<14} {:>4} views over [0, {:>3}) deg, {} bins, operator {}x{}, I0 = 10^{}",
                    preset.name(),
                    g.n_views(),
                    preset.arc_degrees(),
                    g.n_bins,
                    g.n_rays(),
                    g.grid.width * g.grid.height,
                    preset.default_i0().log10()
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::AdjointTest { size } => {
            let worst = adjoint_mismatch(size)?;
            println!("max relative adjoint mismatch at {size}x{size}: {worst:.3e}");
            if worst <= 1e-6 {
                println!("PASS (tolerance 1e-6)");
                Ok(ExitCode::SUCCESS)
            } else {
                println!("FAIL (tolerance 1e-6)");
                Ok(ExitCode::FAILURE)
            }
        }
        Command::Version => {
            println!("tomosketch {}", env!("CARGO_PKG_VERSION"));
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn adjoint_mismatch(size: usize) -> Result<f64, Error> {
    use rand::Rng;
    use rand::SeedableRng;

    let g: FanBeamGeometry = GeometryPreset::SparseView.build(size)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..20 {
        let x = Image::from_fn(size, size, g.grid.pixel_size, |_, _| {
            rng.random_range(-1.0..1.0)
        });
        let s = Sinogram::new(
            g.n_views(),
            g.n_bins,
            (0..g.n_rays()).map(|_| rng.random_range(-1.0..1.0)).collect(),
        )?;
        let ax = project(&x, &g)?;
        let aty = backproject(&s, &g)?;
        let mismatch = (ax.dot(&s) - x.dot(&aty)).abs() / (ax.norm() * s.norm());
        worst = worst.max(mismatch);
    }
    Ok(worst)
}
