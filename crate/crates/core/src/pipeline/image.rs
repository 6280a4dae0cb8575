use alloc::vec;
use alloc::vec::Vec;

use crate::error::{check_len, Error, Result};

/// Grayscale raster, row-major, nominally in `[0, 1]`.
///
/// Intermediate stages may leave the unit range; only noise injection and
/// final reconstruction clamp.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageBuffer {
    width: usize,
    height: usize,
    pixels: Vec<f64>,
}

impl ImageBuffer {
    pub fn new(width: usize, height: usize, pixels: Vec<f64>) -> Result<Self> {
        check_len("image pixels", width * height, pixels.len())?;
        if width == 0 || height == 0 {
            return Err(Error::Contract("image dimensions must be non-zero".into()));
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    pub fn constant(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            pixels: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut pixels = Vec::with_capacity(width * height);
        for r in 0..height {
            for c in 0..width {
                pixels.push(f(r, c));
            }
        }
        Self {
            width,
            height,
            pixels,
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.pixels[row * self.width + col]
    }

    #[inline]
    pub fn set(&mut self, row: usize, col: usize, v: f64) {
        self.pixels[row * self.width + col] = v;
    }

    pub fn pixels(&self) -> &[f64] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [f64] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<f64> {
        self.pixels
    }

    pub fn clamp_unit(&mut self) {
        self.pixels.iter_mut().for_each(|x| *x = x.clamp(0.0, 1.0));
    }

    /// Copy of the `h × w` window with top-left corner `(row, col)`.
    pub fn crop(&self, row: usize, col: usize, w: usize, h: usize) -> Result<Self> {
        if row + h > self.height || col + w > self.width {
            return Err(Error::Contract("crop window leaves the image".into()));
        }
        Ok(Self::from_fn(w, h, |r, c| self.get(row + r, col + c)))
    }
}

/// Channel average `(r + g + b) / 3`.
pub fn to_grayscale(red: &ImageBuffer, green: &ImageBuffer, blue: &ImageBuffer) -> Result<ImageBuffer> {
    for ch in [green, blue] {
        if (ch.width, ch.height) != (red.width, red.height) {
            return Err(Error::Shape {
                what: "color channel",
                expected: red.pixels.len(),
                found: ch.pixels.len(),
            });
        }
    }
    let pixels = red
        .pixels
        .iter()
        .zip(&green.pixels)
        .zip(&blue.pixels)
        .map(|((r, g), b)| (r + g + b) / 3.0)
        .collect();
    Ok(ImageBuffer {
        width: red.width,
        height: red.height,
        pixels,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grayscale_averages_channels() {
        let r = ImageBuffer::constant(2, 1, 0.3);
        let g = ImageBuffer::constant(2, 1, 0.6);
        let b = ImageBuffer::constant(2, 1, 0.9);
        let gray = to_grayscale(&r, &g, &b).unwrap();
        assert!(gray.pixels().iter().all(|&x| (x - 0.6).abs() < 1e-15));
        let ones = ImageBuffer::constant(1, 1, 1.0);
        assert_eq!(to_grayscale(&ones, &ones, &ones).unwrap().pixels(), &[1.0]);
    }

    #[test]
    fn grayscale_is_identity_on_gray_input() {
        let img = ImageBuffer::from_fn(3, 2, |r, c| (r * 3 + c) as f64 / 6.0);
        let out = to_grayscale(&img, &img, &img).unwrap();
        for (a, b) in out.pixels().iter().zip(img.pixels()) {
            assert!((a - b).abs() < 1e-15);
        }
    }

    #[test]
    fn grayscale_rejects_mismatched_channels() {
        let a = ImageBuffer::constant(2, 2, 0.0);
        let b = ImageBuffer::constant(2, 3, 0.0);
        assert!(matches!(to_grayscale(&a, &a, &b), Err(Error::Shape { .. })));
    }
}
