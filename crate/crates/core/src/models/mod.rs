//! Parameter containers and inference for GRBM, GDBM and DAE.

pub mod dae;
pub mod exact;
pub mod gdbm;
pub mod grbm;

use alloc::vec::Vec;

use crate::error::Result;

pub use dae::{dae_decode, dae_denoise_patch, dae_encode, DaeParams};
pub use exact::{exact_posterior_grbm, exact_posterior_small};
pub use gdbm::{
    gdbm_denoise_patch, gdbm_denoise_patch_with, gdbm_energy, gdbm_free_energy, gdbm_mean_field,
    GdbmParams, MeanFieldState,
};
pub use grbm::{grbm_denoise_patch, grbm_visible_mean, rbm_hidden_conditional, GrbmParams};

/// A per-patch denoising function `r_Θ` on the normalized pixel scale.
///
/// Implementations are pure functions of `(patch, self)`.
pub trait PatchDenoiser: Sync {
    fn n_visible(&self) -> usize;
    fn denoise_patch(&self, patch: &[f64]) -> Result<Vec<f64>>;
}

impl PatchDenoiser for GrbmParams {
    fn n_visible(&self) -> usize {
        GrbmParams::n_visible(self)
    }

    fn denoise_patch(&self, patch: &[f64]) -> Result<Vec<f64>> {
        grbm_denoise_patch(patch, self)
    }
}

impl PatchDenoiser for GdbmParams {
    fn n_visible(&self) -> usize {
        GdbmParams::n_visible(self)
    }

    fn denoise_patch(&self, patch: &[f64]) -> Result<Vec<f64>> {
        gdbm_denoise_patch(patch, self)
    }
}

impl PatchDenoiser for DaeParams {
    fn n_visible(&self) -> usize {
        DaeParams::n_visible(self)
    }

    fn denoise_patch(&self, patch: &[f64]) -> Result<Vec<f64>> {
        dae_denoise_patch(patch, self)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ModelKind {
    Grbm,
    Gdbm,
    Dae,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Grbm => "grbm",
            ModelKind::Gdbm => "gdbm",
            ModelKind::Dae => "dae",
        }
    }
}

/// Any of the three model families.
#[derive(Debug, Clone, PartialEq)]
pub enum Model {
    Grbm(GrbmParams),
    Gdbm(GdbmParams),
    Dae(DaeParams),
}

impl Model {
    pub fn kind(&self) -> ModelKind {
        match self {
            Model::Grbm(_) => ModelKind::Grbm,
            Model::Gdbm(_) => ModelKind::Gdbm,
            Model::Dae(_) => ModelKind::Dae,
        }
    }

    /// Hidden layer sizes, bottom to top.
    pub fn layer_sizes(&self) -> Vec<usize> {
        match self {
            Model::Grbm(p) => alloc::vec![p.n_hidden()],
            Model::Gdbm(p) => p.layer_sizes(),
            Model::Dae(p) => p.layer_sizes(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Model::Grbm(p) => p.validate(),
            Model::Gdbm(p) => p.validate(),
            Model::Dae(p) => p.validate(),
        }
    }

    pub fn tensors(&self) -> Vec<&[f64]> {
        match self {
            Model::Grbm(p) => p.tensors(),
            Model::Gdbm(p) => p.tensors(),
            Model::Dae(p) => p.tensors(),
        }
    }
}

impl PatchDenoiser for Model {
    fn n_visible(&self) -> usize {
        match self {
            Model::Grbm(p) => p.n_visible(),
            Model::Gdbm(p) => p.n_visible(),
            Model::Dae(p) => p.n_visible(),
        }
    }

    fn denoise_patch(&self, patch: &[f64]) -> Result<Vec<f64>> {
        match self {
            Model::Grbm(p) => grbm_denoise_patch(patch, p),
            Model::Gdbm(p) => gdbm_denoise_patch(patch, p),
            Model::Dae(p) => dae_denoise_patch(patch, p),
        }
    }
}
