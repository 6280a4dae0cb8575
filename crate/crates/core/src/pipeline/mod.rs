//! Whole-image pipeline: grayscale conversion, noise injection, Wiener
//! prefiltering, patch extraction and normalization, overlap-averaged
//! reconstruction and PSNR.

mod denoise;
mod image;
mod noise;
mod normalize;
mod patches;
mod psnr;
mod wiener;

pub use denoise::{assemble_image, denoise_image, map_patches, prepare_image, PreparedImage};
pub use image::{to_grayscale, ImageBuffer};
pub use noise::{inject_noise, inject_noise_raw, NoiseKind, NoiseSpec};
pub use normalize::{
    denormalize, denormalize_rows, normalize_patches, normalize_rows, NormMode, NormStats,
    VARIANCE_FLOOR,
};
pub use patches::{
    axis_anchors, coverage_counts, extract_patches, reconstruct_image, reconstruct_unclamped,
    PatchSet,
};
pub use psnr::{mse, psnr, psnr_from_mse};
pub use wiener::{wiener_prefilter, WIENER_WINDOW};
