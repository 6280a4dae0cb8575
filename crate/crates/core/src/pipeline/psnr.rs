use super::ImageBuffer;
use crate::error::{Error, Result};
use crate::math::log10;

pub fn mse(clean: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    if (clean.width(), clean.height()) != (test.width(), test.height()) {
        return Err(Error::Shape {
            what: "image for PSNR",
            expected: clean.pixels().len(),
            found: test.pixels().len(),
        });
    }
    let sum: f64 = clean
        .pixels()
        .iter()
        .zip(test.pixels())
        .map(|(a, b)| (a - b) * (a - b))
        .sum();
    Ok(sum / clean.pixels().len() as f64)
}

/// `-10 log10(MSE)` with peak 1. Identical images give `f64::INFINITY`.
pub fn psnr(clean: &ImageBuffer, test: &ImageBuffer) -> Result<f64> {
    Ok(psnr_from_mse(mse(clean, test)?))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        -10.0 * log10(mse)
    }
}
