use alloc::format;

use super::{
    denormalize_rows, extract_patches, normalize_rows, reconstruct_image, wiener_prefilter,
    ImageBuffer, NormStats, PatchSet,
};
use crate::error::{Error, Result};
use crate::math::Matrix;
use crate::models::PatchDenoiser;

/// Noisy image after prefiltering, patch extraction and per-image
/// normalization, ready for the per-patch model map.
#[derive(Debug, Clone)]
pub struct PreparedImage {
    pub width: usize,
    pub height: usize,
    /// Normalized patches.
    pub patches: PatchSet,
    pub stats: NormStats,
}

pub fn prepare_image(noisy: &ImageBuffer, patch_size: usize, stride: usize) -> Result<PreparedImage> {
    let filtered = wiener_prefilter(noisy)?;
    let raw = extract_patches(&filtered, patch_size, stride)?;
    let stats = NormStats::per_image(&raw.patches)?;
    let patches = raw.with_patches(normalize_rows(&raw.patches, &stats)?)?;
    Ok(PreparedImage {
        width: noisy.width(),
        height: noisy.height(),
        patches,
        stats,
    })
}

/// Denormalizes model outputs (one row per prepared patch) and averages the overlaps.
pub fn assemble_image(prepared: &PreparedImage, denoised: Matrix) -> Result<ImageBuffer> {
    let restored = denormalize_rows(&denoised, &prepared.stats)?;
    let ps = prepared.patches.with_patches(restored)?;
    reconstruct_image(&ps, prepared.width, prepared.height)
}

pub(crate) fn check_model_fits<M: PatchDenoiser + ?Sized>(model: &M, patch_size: usize) -> Result<()> {
    if model.n_visible() != patch_size * patch_size {
        return Err(Error::Contract(format!(
            "model expects {} pixels per patch but patch size {patch_size} gives {}",
            model.n_visible(),
            patch_size * patch_size
        )));
    }
    Ok(())
}

/// Applies `model` to every prepared patch, in order.
pub fn map_patches<M: PatchDenoiser + ?Sized>(prepared: &PreparedImage, model: &M) -> Result<Matrix> {
    check_model_fits(model, prepared.patches.patch_size)?;
    let src = &prepared.patches.patches;
    let mut out = Matrix::zeros(src.rows(), src.cols());
    for r in 0..src.rows() {
        let d = model.denoise_patch(src.row(r))?;
        out.row_mut(r).copy_from_slice(&d);
    }
    Ok(out)
}

/// Blind whole-image denoising: Wiener prefilter, patch extraction,
/// per-image normalization, per-patch model, denormalization and overlap
/// averaging. The model never sees the noise type or level.
pub fn denoise_image<M: PatchDenoiser + ?Sized>(
    noisy: &ImageBuffer,
    model: &M,
    patch_size: usize,
    stride: usize,
) -> Result<ImageBuffer> {
    check_model_fits(model, patch_size)?;
    let prepared = prepare_image(noisy, patch_size, stride)?;
    let denoised = map_patches(&prepared, model)?;
    assemble_image(&prepared, denoised)
}
