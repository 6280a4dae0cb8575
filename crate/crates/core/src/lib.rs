//! Patch-based blind image denoising with Gaussian-Bernoulli restricted and
//! deep Boltzmann machines and stacked denoising autoencoders.
//!
//! The crate is `no_std` (it needs `alloc`). Everything here is pure
//! computation: parameter containers and inference ([`models`]), seeded
//! training loops ([`training`]) and the whole-image pipeline
//! ([`pipeline`]). File formats, the CLI and thread pools live in the
//! `deepdenoise` companion crate.
#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;
#[cfg(any(test, feature = "std"))]
extern crate std;

mod error;
pub mod math;
pub mod models;
pub mod pipeline;
pub mod rng;
pub mod training;

pub use error::{Error, Result};
pub use math::Matrix;
pub use models::{
    dae::DaeParams, gdbm::GdbmParams, gdbm::MeanFieldState, grbm::GrbmParams, Model, ModelKind,
    PatchDenoiser,
};
pub use pipeline::{ImageBuffer, NoiseKind, NoiseSpec, NormMode, NormStats, PatchSet};
pub use training::{EpochRecord, PcdState, TrainConfig};
