use std::fs;
use std::path::Path;

use deepdenoise_core::ImageBuffer;

use super::pnm;
use crate::error::{Error, Result};

const PNG_SIGNATURE: &[u8] = b"\x89PNG\r\n\x1a\n";

/// Loads a P5/P6 file, or a PNG when the `png` feature is enabled, as
/// grayscale in `[0, 1]`.
pub fn load_image(path: &Path) -> Result<ImageBuffer> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    decode_image(&bytes, path)
}

pub fn decode_image(bytes: &[u8], path: &Path) -> Result<ImageBuffer> {
    if bytes.starts_with(PNG_SIGNATURE) {
        return decode_png(bytes, path);
    }
    pnm::decode(bytes).map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        offset: e.offset,
        message: e.message,
    })
}

#[cfg(feature = "png")]
fn decode_png(bytes: &[u8], path: &Path) -> Result<ImageBuffer> {
    let img = image::load_from_memory_with_format(bytes, image::ImageFormat::Png).map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    })?;
    let rgb = img.to_rgb32f();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let plane = |c: usize| {
        ImageBuffer::new(w, h, rgb.pixels().map(|p| p.0[c] as f64).collect())
    };
    Ok(deepdenoise_core::pipeline::to_grayscale(&plane(0)?, &plane(1)?, &plane(2)?)?)
}

#[cfg(not(feature = "png"))]
fn decode_png(_: &[u8], path: &Path) -> Result<ImageBuffer> {
    Err(Error::Codec {
        path: path.to_path_buf(),
        offset: 0,
        message: "PNG support was not compiled in".into(),
    })
}

/// Writes 8-bit grayscale: PNG for a `.png` extension, P5 otherwise.
pub fn save_image(img: &ImageBuffer, path: &Path) -> Result<()> {
    let is_png = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("png"));
    let bytes = if is_png { encode_png(img, path)? } else { pnm::encode_pgm(img) };
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

#[cfg(feature = "png")]
fn encode_png(img: &ImageBuffer, path: &Path) -> Result<Vec<u8>> {
    let px: Vec<u8> = img.pixels().iter().map(|&x| pnm::quantize(x)).collect();
    let gray = image::GrayImage::from_raw(img.width() as u32, img.height() as u32, px)
        .ok_or_else(|| Error::Contract("image dimensions overflow".into()))?;
    let mut out = std::io::Cursor::new(Vec::new());
    gray.write_to(&mut out, image::ImageFormat::Png).map_err(|e| Error::Codec {
        path: path.to_path_buf(),
        offset: 0,
        message: e.to_string(),
    })?;
    Ok(out.into_inner())
}

#[cfg(not(feature = "png"))]
fn encode_png(_: &ImageBuffer, path: &Path) -> Result<Vec<u8>> {
    Err(Error::Codec {
        path: path.to_path_buf(),
        offset: 0,
        message: "PNG support was not compiled in".into(),
    })
}
