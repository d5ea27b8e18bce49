//! Reconstruction quality metrics.

use crate::error::{Error, Result};
use crate::image::Image;

/// Reported when the mean squared error is exactly zero.
pub const PSNR_CAP_DB: f64 = 300.0;

/// Peak signal-to-noise ratio in decibels:
/// `10 * log10(peak^2 / MSE)`, or [`PSNR_CAP_DB`] for an exact match.
pub fn psnr(x: &Image, reference: &Image, peak: f64) -> Result<f64> {
    if x.width() != reference.width() || x.height() != reference.height() {
        return Err(Error::Input(format!(
            "psnr dimension mismatch: {}x{} vs {}x{}",
            x.width(),
            x.height(),
            reference.width(),
            reference.height()
        )));
    }
    if peak.is_nan() || peak <= 0.0 {
        return Err(Error::Input(format!("psnr peak must be positive, got {peak}")));
    }
    let mse = x
        .data()
        .iter()
        .zip(reference.data())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        / x.len() as f64;
    if mse == 0.0 {
        return Ok(PSNR_CAP_DB);
    }
    Ok(10.0 * (peak * peak / mse).log10())
}
