//! Ground-truth phantoms and measurement simulation.
//!
//! Measurements follow transmission physics: photon counts are drawn as
//! `Poisson(I0 * exp(-p))` per detector bin, where `p` is the noiseless
//! line integral, then log-transformed back into line-integral units
//! (`b = -ln(max(counts, 1) / I0)`). Zero counts are clamped to one
//! photon before the log so `b` is always finite. Lower `I0` means fewer
//! photons and noisier data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Poisson};

use crate::error::{Error, Result};
use crate::geometry::{FanBeamGeometry, GridSpec};
use crate::image::{Image, Sinogram};
use crate::operators::project;

/// Physical side length of the reconstruction domain, in length-units.
pub const DOMAIN_SIDE: f64 = 2.0;

/// Source and detector orbit radii of the standard trajectory.
pub const SOURCE_RADIUS: f64 = 3.0;
pub const DETECTOR_RADIUS: f64 = 3.0;

/// Detector bin count at the reference 256-pixel grid.
pub const REFERENCE_BINS: usize = 228;
pub const REFERENCE_SIZE: usize = 256;

/// Phantom families.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhantomKind {
    /// Non-overlapping disks of several sizes and intensities on a zero
    /// background.
    Disks,
    /// Standard ten-ellipse head phantom, clamped to [0, 1].
    SheppLogan,
}

impl PhantomKind {
    pub fn name(&self) -> &'static str {
        match self {
            PhantomKind::Disks => "disks",
            PhantomKind::SheppLogan => "shepp_logan",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "disks" => Ok(PhantomKind::Disks),
            "shepp_logan" => Ok(PhantomKind::SheppLogan),
            other => Err(Error::Config(format!("unknown phantom kind `{other}`"))),
        }
    }
}

/// Phantom description. With `randomize` unset, the disks use a fixed
/// hand-placed layout; otherwise positions are drawn from `seed`.
#[derive(Debug, Clone, PartialEq)]
pub struct PhantomSpec {
    pub kind: PhantomKind,
    /// Pixels per side; at least 16 and divisible by 16 so every stage
    /// factor applies.
    pub size: usize,
    pub randomize: bool,
    pub seed: u64,
}

impl PhantomSpec {
    pub fn disks(size: usize) -> Self {
        Self {
            kind: PhantomKind::Disks,
            size,
            randomize: false,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.size < 16 || !self.size.is_multiple_of(16) {
            return Err(Error::Config(format!(
                "phantom size must be >= 16 and divisible by 16, got {}",
                self.size
            )));
        }
        Ok(())
    }
}

/// Fixed disk layout: (center x, center y, radius, intensity), all as
/// fractions of the side. Six distinct radii, six distinct intensities,
/// pairwise non-overlapping with margin.
const DISK_LAYOUT: [(f64, f64, f64, f64); 6] = [
    (0.32, 0.34, 0.155, 1.00),
    (0.68, 0.30, 0.110, 0.80),
    (0.37, 0.70, 0.085, 0.60),
    (0.67, 0.66, 0.060, 0.90),
    (0.52, 0.485, 0.040, 0.40),
    (0.79, 0.82, 0.027, 0.70),
];

fn random_disk_layout(seed: u64) -> Vec<(f64, f64, f64, f64)> {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut placed: Vec<(f64, f64, f64, f64)> = Vec::new();
    for &(_, _, radius, value) in &DISK_LAYOUT {
        let mut r = radius;
        loop {
            let mut ok = false;
            for _ in 0..1000 {
                let cx = rng.random_range(r + 0.02..1.0 - r - 0.02);
                let cy = rng.random_range(r + 0.02..1.0 - r - 0.02);
                if placed
                    .iter()
                    .all(|&(px, py, pr, _)| (cx - px).hypot(cy - py) > r + pr + 0.01)
                {
                    placed.push((cx, cy, r, value));
                    ok = true;
                    break;
                }
            }
            if ok {
                break;
            }
            // Overfull after many tries: shrink slightly and retry.
            r *= 0.95;
        }
    }
    placed
}

fn rasterize_disks(size: usize, layout: &[(f64, f64, f64, f64)]) -> Image {
    let pixel_size = DOMAIN_SIDE / size as f64;
    let s = size as f64;
    Image::from_fn(size, size, pixel_size, |row, col| {
        let x = (col as f64 + 0.5) / s;
        let y = (row as f64 + 0.5) / s;
        for &(cx, cy, r, v) in layout {
            if (x - cx).hypot(y - cy) <= r {
                return v;
            }
        }
        0.0
    })
}

/// Ten-ellipse head phantom: (additive value, semi-axis a, semi-axis b,
/// center x, center y, rotation degrees) on the [-1, 1] square.
const SHEPP_LOGAN_ELLIPSES: [(f64, f64, f64, f64, f64, f64); 10] = [
    (1.0, 0.69, 0.92, 0.0, 0.0, 0.0),
    (-0.8, 0.6624, 0.874, 0.0, -0.0184, 0.0),
    (-0.2, 0.11, 0.31, 0.22, 0.0, -18.0),
    (-0.2, 0.16, 0.41, -0.22, 0.0, 18.0),
    (0.1, 0.21, 0.25, 0.0, 0.35, 0.0),
    (0.1, 0.046, 0.046, 0.0, 0.1, 0.0),
    (0.1, 0.046, 0.046, 0.0, -0.1, 0.0),
    (0.1, 0.046, 0.023, -0.08, -0.605, 0.0),
    (0.1, 0.023, 0.023, 0.0, -0.606, 0.0),
    (0.1, 0.023, 0.046, 0.06, -0.605, 0.0),
];

fn rasterize_shepp_logan(size: usize) -> Image {
    let pixel_size = DOMAIN_SIDE / size as f64;
    let s = size as f64;
    Image::from_fn(size, size, pixel_size, |row, col| {
        let x = 2.0 * (col as f64 + 0.5) / s - 1.0;
        let y = 2.0 * (row as f64 + 0.5) / s - 1.0;
        let mut v = 0.0;
        for &(value, a, b, x0, y0, phi_deg) in &SHEPP_LOGAN_ELLIPSES {
            let phi = phi_deg.to_radians();
            let (dx, dy) = (x - x0, y - y0);
            let xr = dx * phi.cos() + dy * phi.sin();
            let yr = -dx * phi.sin() + dy * phi.cos();
            if (xr / a).powi(2) + (yr / b).powi(2) <= 1.0 {
                v += value;
            }
        }
        v.clamp(0.0, 1.0)
    })
}

/// Deterministic phantom for a given [`PhantomSpec`]; background is
/// exactly zero for the disks family.
pub fn make_phantom(spec: &PhantomSpec) -> Result<Image> {
    spec.validate()?;
    Ok(match spec.kind {
        PhantomKind::Disks => {
            if spec.randomize {
                rasterize_disks(spec.size, &random_disk_layout(spec.seed))
            } else {
                rasterize_disks(spec.size, &DISK_LAYOUT)
            }
        }
        PhantomKind::SheppLogan => rasterize_shepp_logan(spec.size),
    })
}

/// Poisson counting noise parameters: incident photons per bin and the
/// generator seed.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseSpec {
    pub i0: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(i0: f64, seed: u64) -> Result<Self> {
        if i0.is_nan() || i0 <= 0.0 || !i0.is_finite() {
            return Err(Error::Config(format!("photon count I0 must be positive, got {i0}")));
        }
        Ok(Self { i0, seed })
    }
}

/// Simulate noisy measurements of a nonnegative attenuation image:
/// project, draw Poisson counts at `I0 * exp(-p)` per bin in row-major
/// order, clamp zero counts to one photon, and log-transform back to
/// line-integral units.
pub fn simulate_measurements(
    x: &Image,
    g: &FanBeamGeometry,
    noise: &NoiseSpec,
) -> Result<Sinogram> {
    if noise.i0.is_nan() || noise.i0 <= 0.0 || !noise.i0.is_finite() {
        return Err(Error::Config(format!(
            "photon count I0 must be positive, got {}",
            noise.i0
        )));
    }
    if x.data().iter().any(|&v| v < 0.0) {
        return Err(Error::Input(
            "attenuation image must be nonnegative for transmission simulation".into(),
        ));
    }
    let clean = project(x, g)?;
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    let ln_i0 = noise.i0.ln();
    let mut out = clean;
    for v in out.data_mut() {
        let lambda = noise.i0 * (-*v).exp();
        let counts = if lambda > 0.0 {
            Poisson::new(lambda)
                .map_err(|e| Error::Input(format!("invalid Poisson mean {lambda}: {e}")))?
                .sample(&mut rng)
        } else {
            0.0
        };
        *v = ln_i0 - counts.max(1.0).ln();
    }
    Ok(out)
}

/// The three standard acquisition presets.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GeometryPreset {
    /// 90 views equally spaced over [0, 360).
    SparseView,
    /// 360 views equally spaced over [0, 360).
    LowDose,
    /// 90 views equally spaced over [0, 180).
    LimitedAngle,
}

impl GeometryPreset {
    pub const ALL: [GeometryPreset; 3] = [
        GeometryPreset::SparseView,
        GeometryPreset::LowDose,
        GeometryPreset::LimitedAngle,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeometryPreset::SparseView => "sparse_view",
            GeometryPreset::LowDose => "low_dose",
            GeometryPreset::LimitedAngle => "limited_angle",
        }
    }

    pub fn from_name(name: &str) -> Result<Self> {
        match name {
            "sparse_view" => Ok(GeometryPreset::SparseView),
            "low_dose" => Ok(GeometryPreset::LowDose),
            "limited_angle" => Ok(GeometryPreset::LimitedAngle),
            other => Err(Error::Config(format!("unknown geometry preset `{other}`"))),
        }
    }

    pub fn n_views(&self) -> usize {
        match self {
            GeometryPreset::LowDose => 360,
            _ => 90,
        }
    }

    pub fn arc_degrees(&self) -> f64 {
        match self {
            GeometryPreset::LimitedAngle => 180.0,
            _ => 360.0,
        }
    }

    /// Default incident photon count: the low-dose study runs at
    /// 10^3.5, the others at 10^5.5.
    pub fn default_i0(&self) -> f64 {
        match self {
            GeometryPreset::LowDose => 10f64.powf(3.5),
            _ => 10f64.powf(5.5),
        }
    }

    /// Build the preset on a grid of the given side, scaling the bin
    /// count proportionally from the 256-pixel reference.
    pub fn build(&self, size: usize) -> Result<FanBeamGeometry> {
        let n_bins = scaled_bins(size);
        FanBeamGeometry::equiangular(
            self.n_views(),
            0.0,
            self.arc_degrees(),
            n_bins,
            SOURCE_RADIUS,
            DETECTOR_RADIUS,
            GridSpec::square(size, DOMAIN_SIDE / size as f64),
        )
    }
}

/// Bin count proportional to the grid side, rounded, never below 8.
pub fn scaled_bins(size: usize) -> usize {
    ((REFERENCE_BINS * size + REFERENCE_SIZE / 2) / REFERENCE_SIZE).max(8)
}

/// The three presets at the reference 256-pixel grid.
pub fn standard_geometries() -> Vec<(GeometryPreset, FanBeamGeometry)> {
    GeometryPreset::ALL
        .iter()
        .map(|p| (*p, p.build(REFERENCE_SIZE).expect("reference presets are valid")))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn phantoms_are_deterministic() {
        for spec in [
            PhantomSpec::disks(64),
            PhantomSpec {
                kind: PhantomKind::Disks,
                size: 64,
                randomize: true,
                seed: 42,
            },
            PhantomSpec {
                kind: PhantomKind::SheppLogan,
                size: 64,
                randomize: false,
                seed: 0,
            },
        ] {
            assert_eq!(make_phantom(&spec).unwrap(), make_phantom(&spec).unwrap());
        }
    }

    #[test]
    fn disks_have_distinct_intensities_and_zero_background() {
        let img = make_phantom(&PhantomSpec::disks(256)).unwrap();
        let levels: BTreeSet<u64> = img
            .data()
            .iter()
            .filter(|&&v| v != 0.0)
            .map(|v| v.to_bits())
            .collect();
        assert!(levels.len() >= 4, "only {} intensity levels", levels.len());
        // Every pixel is exactly one of the layout values or exactly zero.
        let allowed: BTreeSet<u64> = DISK_LAYOUT.iter().map(|d| d.3.to_bits()).collect();
        for &v in img.data() {
            assert!(v == 0.0 || allowed.contains(&v.to_bits()), "stray value {v}");
        }
        assert_eq!(img.get(0, 0), 0.0);
        assert_eq!(img.get(255, 255), 0.0);
        assert!(img.max_value() <= 1.0);
    }

    #[test]
    fn random_layout_keeps_disks_disjoint() {
        for seed in [1u64, 2, 3] {
            let layout = random_disk_layout(seed);
            assert_eq!(layout.len(), 6);
            for i in 0..layout.len() {
                for j in (i + 1)..layout.len() {
                    let (ax, ay, ar, _) = layout[i];
                    let (bx, by, br, _) = layout[j];
                    assert!((ax - bx).hypot(ay - by) > ar + br, "seed {seed}: overlap");
                }
            }
        }
    }

    #[test]
    fn shepp_logan_values_stay_in_unit_range() {
        let img = make_phantom(&PhantomSpec {
            kind: PhantomKind::SheppLogan,
            size: 128,
            randomize: false,
            seed: 0,
        })
        .unwrap();
        assert!(img.data().iter().all(|&v| (0.0..=1.0).contains(&v)));
        // Skull ring present (value 1 somewhere) and ventricles darker
        // than surrounding tissue.
        assert_eq!(img.max_value(), 1.0);
    }

    #[test]
    fn phantom_size_is_validated() {
        assert!(make_phantom(&PhantomSpec::disks(8)).is_err());
        assert!(make_phantom(&PhantomSpec::disks(100)).is_err());
    }

    #[test]
    fn measurements_are_seed_reproducible() {
        let g = GeometryPreset::SparseView.build(32).unwrap();
        let x = make_phantom(&PhantomSpec::disks(32)).unwrap();
        let noise = NoiseSpec::new(1e4, 7).unwrap();
        let a = simulate_measurements(&x, &g, &noise).unwrap();
        let b = simulate_measurements(&x, &g, &noise).unwrap();
        assert_eq!(a, b);
        let c = simulate_measurements(&x, &g, &NoiseSpec::new(1e4, 8).unwrap()).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn zero_counts_are_clamped_to_finite_values() {
        let g = GeometryPreset::SparseView.build(32).unwrap();
        let x = make_phantom(&PhantomSpec::disks(32)).unwrap();
        // Essentially every bin sees zero photons at this dose.
        let noise = NoiseSpec::new(1e-3, 1).unwrap();
        let b = simulate_measurements(&x, &g, &noise).unwrap();
        assert!(b.data().iter().all(|v| v.is_finite()));
    }

    #[test]
    fn negative_attenuation_rejected() {
        let g = GeometryPreset::SparseView.build(32).unwrap();
        let mut x = make_phantom(&PhantomSpec::disks(32)).unwrap();
        x.data_mut()[5] = -0.1;
        assert!(matches!(
            simulate_measurements(&x, &g, &NoiseSpec::new(1e4, 1).unwrap()),
            Err(Error::Input(_))
        ));
    }

    #[test]
    fn noise_vanishes_as_dose_grows() {
        let g = GeometryPreset::SparseView.build(64).unwrap();
        let x = make_phantom(&PhantomSpec::disks(64)).unwrap();
        let clean = project(&x, &g).unwrap();
        let noisy = simulate_measurements(&x, &g, &NoiseSpec::new(1e12, 3).unwrap()).unwrap();
        let rel = noisy.axpy(-1.0, &clean).norm() / clean.norm();
        assert!(rel <= 1e-4, "relative deviation {rel} at I0 = 1e12");
    }

    #[test]
    fn thicker_objects_attenuate_more() {
        let g = FanBeamGeometry::equiangular(
            1,
            0.0,
            360.0,
            31,
            SOURCE_RADIUS,
            DETECTOR_RADIUS,
            GridSpec::square(64, DOMAIN_SIDE / 64.0),
        )
        .unwrap();
        let disk = |radius: f64| {
            Image::from_fn(64, 64, g.grid.pixel_size, |r, c| {
                let y = -1.0 + (r as f64 + 0.5) * g.grid.pixel_size;
                let x = -1.0 + (c as f64 + 0.5) * g.grid.pixel_size;
                if x.hypot(y) <= radius {
                    0.5
                } else {
                    0.0
                }
            })
        };
        let noise = NoiseSpec::new(1e10, 5).unwrap();
        let thin = simulate_measurements(&disk(0.3), &g, &noise).unwrap();
        let thick = simulate_measurements(&disk(0.6), &g, &noise).unwrap();
        // Central ray passes through both disks' full diameters.
        assert!(thick.get(0, 15) > thin.get(0, 15));
    }

    #[test]
    fn presets_match_reference_operator_shapes() {
        let all = standard_geometries();
        let shape = |g: &FanBeamGeometry| (g.n_rays(), g.grid.width * g.grid.height);
        assert_eq!(shape(&all[0].1), (20520, 65536));
        assert_eq!(shape(&all[1].1), (82080, 65536));
        assert_eq!(shape(&all[2].1), (20520, 65536));
        let limited = &all[2].1;
        assert!(limited.angles_deg.iter().all(|&a| a < 180.0));
        assert_eq!(all[0].1.n_bins, 228);
    }

    #[test]
    fn scaled_bins_track_grid_side() {
        assert_eq!(scaled_bins(256), 228);
        assert_eq!(scaled_bins(128), 114);
        assert_eq!(scaled_bins(64), 57);
        assert_eq!(scaled_bins(32), 29);
    }

    #[test]
    fn preset_default_doses() {
        assert_eq!(GeometryPreset::SparseView.default_i0(), 10f64.powf(5.5));
        assert_eq!(GeometryPreset::LowDose.default_i0(), 10f64.powf(3.5));
    }
}
