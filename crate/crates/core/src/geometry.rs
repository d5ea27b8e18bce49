//! Fan-beam acquisition geometry.
//!
//! A `FanBeamGeometry` pins down everything the projector needs: the
//! source/detector trajectory (circular, one position per view angle),
//! the flat detector (bin count and physical span), and the image grid
//! the rays integrate over. The matrix it induces is never materialized;
//! `n_views * n_bins` is its row count and `grid` pixels its column count.

use crate::error::{Error, Result};
use crate::image::Image;

/// Image-domain grid: square pixels, physically centered on the rotation
/// axis.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub width: usize,
    pub height: usize,
    pub pixel_size: f64,
}

impl GridSpec {
    pub fn square(side: usize, pixel_size: f64) -> Self {
        Self {
            width: side,
            height: side,
            pixel_size,
        }
    }

    /// Physical extent in x (width direction).
    pub fn physical_width(&self) -> f64 {
        self.width as f64 * self.pixel_size
    }

    pub fn physical_height(&self) -> f64 {
        self.height as f64 * self.pixel_size
    }

    /// Radius of the circle circumscribing the grid.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * (self.physical_width().hypot(self.physical_height()))
    }

    pub fn matches_image(&self, img: &Image) -> bool {
        self.width == img.width()
            && self.height == img.height()
            && self.pixel_size == img.pixel_size()
    }
}

/// Circular fan-beam trajectory with a flat detector.
///
/// The source for view `v` sits at `source_radius * (cos a_v, sin a_v)`
/// with `a_v = angles_deg[v]`; the detector array is centered at
/// `-detector_radius * (cos a_v, sin a_v)` and spans `detector_span`
/// length-units perpendicular to the central ray. Rays connect the source
/// to each bin center.
#[derive(Debug, Clone, PartialEq)]
pub struct FanBeamGeometry {
    pub angles_deg: Vec<f64>,
    pub n_bins: usize,
    pub source_radius: f64,
    pub detector_radius: f64,
    pub detector_span: f64,
    pub grid: GridSpec,
}

/// Extra room so the fan covers the grid's circumscribed circle.
pub const FAN_COVERAGE_MARGIN: f64 = 1.05;

impl FanBeamGeometry {
    /// Validated constructor. The source must stay outside the image's
    /// circumscribed circle and the view angles must be strictly
    /// increasing.
    pub fn new(
        angles_deg: Vec<f64>,
        n_bins: usize,
        source_radius: f64,
        detector_radius: f64,
        detector_span: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        if angles_deg.is_empty() {
            return Err(Error::Config("geometry needs at least one view".into()));
        }
        if !angles_deg.windows(2).all(|w| w[0] < w[1]) {
            return Err(Error::Config(
                "view angles must be strictly increasing".into(),
            ));
        }
        if n_bins == 0 {
            return Err(Error::Config("geometry needs at least one bin".into()));
        }
        if source_radius <= grid.half_diagonal() {
            return Err(Error::Config(format!(
                "source radius {source_radius} must exceed the image half-diagonal {}",
                grid.half_diagonal()
            )));
        }
        if detector_radius <= 0.0 || detector_span <= 0.0 {
            return Err(Error::Config(
                "detector radius and span must be positive".into(),
            ));
        }
        Ok(Self {
            angles_deg,
            n_bins,
            source_radius,
            detector_radius,
            detector_span,
            grid,
        })
    }

    /// Equally spaced views over `[arc_start, arc_start + arc_deg)`, with
    /// the detector span sized so the fan covers the grid's circumscribed
    /// circle with a small margin.
    pub fn equiangular(
        n_views: usize,
        arc_start_deg: f64,
        arc_deg: f64,
        n_bins: usize,
        source_radius: f64,
        detector_radius: f64,
        grid: GridSpec,
    ) -> Result<Self> {
        if n_views == 0 {
            return Err(Error::Config("geometry needs at least one view".into()));
        }
        let angles = (0..n_views)
            .map(|v| arc_start_deg + arc_deg * v as f64 / n_views as f64)
            .collect();
        let span = covering_detector_span(source_radius, detector_radius, &grid)?;
        Self::new(angles, n_bins, source_radius, detector_radius, span, grid)
    }

    pub fn n_views(&self) -> usize {
        self.angles_deg.len()
    }

    /// Row count of the induced operator.
    pub fn n_rays(&self) -> usize {
        self.n_views() * self.n_bins
    }

    /// Source position for a view, in physical coordinates.
    pub fn source_position(&self, view: usize) -> (f64, f64) {
        let a = self.angles_deg[view].to_radians();
        (self.source_radius * a.cos(), self.source_radius * a.sin())
    }

    /// Center of detector bin `bin` for a view, in physical coordinates.
    pub fn detector_bin_position(&self, view: usize, bin: usize) -> (f64, f64) {
        let a = self.angles_deg[view].to_radians();
        let (cos_a, sin_a) = (a.cos(), a.sin());
        let center = (-self.detector_radius * cos_a, -self.detector_radius * sin_a);
        // Unit vector along the detector, perpendicular to the central ray.
        let u = (-sin_a, cos_a);
        let offset = ((bin as f64 + 0.5) / self.n_bins as f64 - 0.5) * self.detector_span;
        (center.0 + offset * u.0, center.1 + offset * u.1)
    }

    /// Same trajectory on a coarser grid: side divided by `factor`,
    /// pixel size multiplied by `factor`. Views, bins, and physical
    /// distances are untouched.
    pub fn with_coarsened_grid(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::Config("grid factor must be >= 1".into()));
        }
        if !self.grid.width.is_multiple_of(factor) || !self.grid.height.is_multiple_of(factor) {
            return Err(Error::Config(format!(
                "grid {}x{} is not divisible by factor {factor}",
                self.grid.width, self.grid.height
            )));
        }
        let mut g = self.clone();
        g.grid = GridSpec {
            width: self.grid.width / factor,
            height: self.grid.height / factor,
            pixel_size: self.grid.pixel_size * factor as f64,
        };
        Ok(g)
    }
}

/// Detector span that covers the grid's circumscribed circle with
/// [`FAN_COVERAGE_MARGIN`], for a flat detector.
pub fn covering_detector_span(
    source_radius: f64,
    detector_radius: f64,
    grid: &GridSpec,
) -> Result<f64> {
    let target = FAN_COVERAGE_MARGIN * grid.half_diagonal();
    if target >= source_radius {
        return Err(Error::Config(format!(
            "source radius {source_radius} too small to cover an object of radius {target}"
        )));
    }
    // Half fan angle seeing the circle, projected onto the flat detector.
    let half_angle = (target / source_radius).asin();
    Ok(2.0 * (source_radius + detector_radius) * half_angle.tan())
}
