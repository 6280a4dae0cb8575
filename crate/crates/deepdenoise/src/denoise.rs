//! Whole-image denoising with the per-patch map spread over the current
//! rayon pool.

use deepdenoise_core::pipeline::{assemble_image, prepare_image};
use deepdenoise_core::{ImageBuffer, Matrix, PatchDenoiser};
use rayon::prelude::*;

use crate::error::{Error, Result};

const ROWS_PER_TASK: usize = 256;

/// Same result as `deepdenoise_core::pipeline::denoise_image`, bit for bit,
/// for any thread count: patches are independent and the overlap average
/// is accumulated sequentially in patch order.
pub fn denoise_image_parallel<M: PatchDenoiser + ?Sized>(
    noisy: &ImageBuffer,
    model: &M,
    patch_size: usize,
    stride: usize,
) -> Result<ImageBuffer> {
    if model.n_visible() != patch_size * patch_size {
        return Err(Error::Contract(format!(
            "model expects {} pixels per patch but patch size {patch_size} gives {}",
            model.n_visible(),
            patch_size * patch_size
        )));
    }
    let prepared = prepare_image(noisy, patch_size, stride)?;
    let src = &prepared.patches.patches;
    let width = src.cols();
    let mut out = Matrix::zeros(src.rows(), width);
    out.as_mut_slice()
        .par_chunks_mut(ROWS_PER_TASK * width)
        .enumerate()
        .try_for_each(|(chunk, dst)| -> Result<()> {
            for (k, row) in dst.chunks_mut(width).enumerate() {
                let r = chunk * ROWS_PER_TASK + k;
                row.copy_from_slice(&model.denoise_patch(src.row(r))?);
            }
            Ok(())
        })?;
    Ok(assemble_image(&prepared, out)?)
}
