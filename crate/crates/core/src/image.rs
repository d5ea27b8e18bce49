//! Pixel-grid images and sinograms.
//!
//! `Image` is a 2D scalar field on a square-pixel grid with an attached
//! physical pixel size, stored row-major. It holds ground truths, solver
//! iterates, and gradients alike. `Sinogram` is the views x detector-bins
//! array of line integrals (or log-transformed photon counts).

use crate::error::{Error, Result};

/// 2D scalar field on a pixel grid with physical pixel size.
///
/// `data[row * width + col]` is the attenuation (per length-unit) of the
/// pixel at (row, col). Row 0 sits at the lowest physical y coordinate;
/// the grid is centered on the rotation axis.
#[derive(Debug, Clone, PartialEq)]
pub struct Image {
    width: usize,
    height: usize,
    pixel_size: f64,
    data: Vec<f64>,
}

impl Image {
    /// Build an image from row-major samples, validating the invariants:
    /// positive dimensions and pixel size, matching data length, finite
    /// entries.
    pub fn new(width: usize, height: usize, pixel_size: f64, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Config(format!(
                "image dimensions must be >= 1, got {width}x{height}"
            )));
        }
        if pixel_size.is_nan() || pixel_size <= 0.0 || !pixel_size.is_finite() {
            return Err(Error::Config(format!(
                "pixel size must be positive and finite, got {pixel_size}"
            )));
        }
        if data.len() != width * height {
            return Err(Error::Config(format!(
                "image data length {} does not match {width}x{height}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Input("image contains non-finite values".into()));
        }
        Ok(Self {
            width,
            height,
            pixel_size,
            data,
        })
    }

    /// All-zero image, shape validated by construction.
    pub fn zeros(width: usize, height: usize, pixel_size: f64) -> Self {
        Self {
            width,
            height,
            pixel_size,
            data: vec![0.0; width * height],
        }
    }

    /// Fill from a function of (row, col).
    pub fn from_fn(
        width: usize,
        height: usize,
        pixel_size: f64,
        mut f: impl FnMut(usize, usize) -> f64,
    ) -> Self {
        let mut data = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                data.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            pixel_size,
            data,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixel_size(&self) -> f64 {
        self.pixel_size
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.data[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, value: f64) {
        self.data[row * self.width + col] = value;
    }

    /// Same shape and pixel size (exact float equality on pixel size).
    pub fn same_grid(&self, other: &Image) -> bool {
        self.width == other.width
            && self.height == other.height
            && self.pixel_size == other.pixel_size
    }

    pub fn all_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn dot(&self, other: &Image) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_value(&self) -> f64 {
        self.data.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// self + scale * other, elementwise.
    pub fn axpy(&self, scale: f64, other: &Image) -> Image {
        debug_assert!(self.same_grid(other));
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + scale * b)
            .collect();
        Image {
            width: self.width,
            height: self.height,
            pixel_size: self.pixel_size,
            data,
        }
    }

    pub fn scaled(&self, scale: f64) -> Image {
        Image {
            width: self.width,
            height: self.height,
            pixel_size: self.pixel_size,
            data: self.data.iter().map(|v| v * scale).collect(),
        }
    }

    pub(crate) fn with_data(&self, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), self.data.len());
        Image {
            width: self.width,
            height: self.height,
            pixel_size: self.pixel_size,
            data,
        }
    }

    pub(crate) fn raw(width: usize, height: usize, pixel_size: f64, data: Vec<f64>) -> Image {
        debug_assert_eq!(data.len(), width * height);
        Image {
            width,
            height,
            pixel_size,
            data,
        }
    }
}

/// Stack of projection measurements: `n_views` source angles, `n_bins`
/// detector bins per view, stored row-major by view.
#[derive(Debug, Clone, PartialEq)]
pub struct Sinogram {
    n_views: usize,
    n_bins: usize,
    data: Vec<f64>,
}

impl Sinogram {
    pub fn new(n_views: usize, n_bins: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_views * n_bins {
            return Err(Error::Config(format!(
                "sinogram data length {} does not match {n_views}x{n_bins}",
                data.len()
            )));
        }
        if !data.iter().all(|v| v.is_finite()) {
            return Err(Error::Input("sinogram contains non-finite values".into()));
        }
        Ok(Self {
            n_views,
            n_bins,
            data,
        })
    }

    pub fn zeros(n_views: usize, n_bins: usize) -> Self {
        Self {
            n_views,
            n_bins,
            data: vec![0.0; n_views * n_bins],
        }
    }

    pub fn n_views(&self) -> usize {
        self.n_views
    }

    pub fn n_bins(&self) -> usize {
        self.n_bins
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    #[inline]
    pub fn get(&self, view: usize, bin: usize) -> f64 {
        self.data[view * self.n_bins + bin]
    }

    #[inline]
    pub fn set(&mut self, view: usize, bin: usize, value: f64) {
        self.data[view * self.n_bins + bin] = value;
    }

    /// One view's row of bins.
    pub fn view_row(&self, view: usize) -> &[f64] {
        let start = view * self.n_bins;
        &self.data[start..start + self.n_bins]
    }

    pub fn dot(&self, other: &Sinogram) -> f64 {
        debug_assert_eq!(self.len(), other.len());
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a * b)
            .sum()
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    /// self + scale * other, elementwise.
    pub fn axpy(&self, scale: f64, other: &Sinogram) -> Sinogram {
        debug_assert_eq!(self.len(), other.len());
        Sinogram {
            n_views: self.n_views,
            n_bins: self.n_bins,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + scale * b)
                .collect(),
        }
    }

    pub fn scaled(&self, scale: f64) -> Sinogram {
        Sinogram {
            n_views: self.n_views,
            n_bins: self.n_bins,
            data: self.data.iter().map(|v| v * scale).collect(),
        }
    }
}
