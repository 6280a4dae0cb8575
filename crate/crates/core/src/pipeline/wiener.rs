use alloc::vec::Vec;

use super::ImageBuffer;
use crate::error::{Error, Result};

/// Side length of the Wiener neighbourhood.
pub const WIENER_WINDOW: usize = 3;

/// Pixel-wise adaptive Wiener filter over a 3×3 neighbourhood.
///
/// With local mean `m`, local variance `s²` (border replicated) and noise
/// power `ν` taken as the mean of all local variances, each pixel becomes
/// `m + max(s² - ν, 0) / max(s², ν) · (x - m)`. The result is clamped to
/// `[0, 1]`.
pub fn wiener_prefilter(img: &ImageBuffer) -> Result<ImageBuffer> {
    let (w, h) = (img.width(), img.height());
    if w < WIENER_WINDOW || h < WIENER_WINDOW {
        return Err(Error::Contract(alloc::format!(
            "image {w}x{h} is smaller than the {WIENER_WINDOW}x{WIENER_WINDOW} Wiener window"
        )));
    }
    let n = (WIENER_WINDOW * WIENER_WINDOW) as f64;
    let mut means = Vec::with_capacity(w * h);
    let mut vars = Vec::with_capacity(w * h);
    for r in 0..h {
        for c in 0..w {
            let (mut s, mut s2) = (0.0, 0.0);
            for dr in -1i64..=1 {
                let rr = (r as i64 + dr).clamp(0, h as i64 - 1) as usize;
                for dc in -1i64..=1 {
                    let cc = (c as i64 + dc).clamp(0, w as i64 - 1) as usize;
                    let x = img.get(rr, cc);
                    s += x;
                    s2 += x * x;
                }
            }
            let m = s / n;
            means.push(m);
            vars.push((s2 / n - m * m).max(0.0));
        }
    }
    let noise = vars.iter().sum::<f64>() / vars.len() as f64;
    let mut out = img.clone();
    for ((x, m), s2) in out.pixels_mut().iter_mut().zip(&means).zip(&vars) {
        let denom = s2.max(noise);
        let gain = if denom > 0.0 { (s2 - noise).max(0.0) / denom } else { 0.0 };
        *x = (m + gain * (*x - m)).clamp(0.0, 1.0);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_image_is_unchanged() {
        let img = ImageBuffer::constant(7, 5, 0.42);
        let out = wiener_prefilter(&img).unwrap();
        for &x in out.pixels() {
            assert!((x - 0.42).abs() < 1e-15);
        }
    }

    #[test]
    fn small_images_are_rejected() {
        assert!(matches!(
            wiener_prefilter(&ImageBuffer::constant(2, 9, 0.0)),
            Err(Error::Contract(_))
        ));
    }

    #[test]
    fn output_stays_in_unit_range() {
        let img = ImageBuffer::from_fn(9, 9, |r, c| if (r + c) % 2 == 0 { 1.0 } else { 0.0 });
        let out = wiener_prefilter(&img).unwrap();
        assert!(out.pixels().iter().all(|x| (0.0..=1.0).contains(x)));
    }
}
