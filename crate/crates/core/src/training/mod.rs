//! Seeded stochastic-gradient training for all three model families.
//!
//! Every routine is single-threaded and a pure function of its inputs and
//! `TrainConfig::seed`. Progress is reported once per epoch through a
//! caller-supplied sink so the crate stays free of IO.

mod corrupt;
mod dae;
mod gdbm;
mod rbm;

use alloc::format;
use alloc::vec::Vec;
use core::fmt;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::math::Matrix;
use crate::rng::{mix, stream_rng};

pub use corrupt::{corrupt_input, corrupt_with, mask_count};
pub use dae::{dae_loss_and_grad, dae_loss_and_grad_on, init_dae, train_dae};
pub use gdbm::{finetune_gdbm, init_gdbm_chains, pretrain_gdbm};
pub use rbm::{grbm_pcd_gradient, grbm_pcd_step, init_grbm, train_grbm, PcdState, RbmGradient};

/// Hyper-parameters shared by the trainers.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainConfig {
    pub epochs: usize,
    pub minibatch: usize,
    /// Initial learning rate of single-layer / pretraining phases.
    pub lr0: f64,
    /// Initial learning rate of whole-model finetuning.
    pub finetune_lr0: f64,
    /// Updates after which the `η₀ / (1 + t / halflife)` schedule has halved.
    pub lr_halflife: f64,
    /// Fraction of epochs run at the constant rate before `1/t` annealing (Boltzmann machines).
    pub anneal_start: f64,
    pub seed: u64,
    pub sparsity_lambda: f64,
    pub sparsity_rho: f64,
    pub corrupt_gauss_std: f64,
    pub corrupt_mask_frac: f64,
    pub weight_init_std: f64,
    /// Persistent chains; `None` means one per minibatch sample.
    pub n_chains: Option<usize>,
}

fn positive(x: f64) -> bool {
    x.is_finite() && x > 0.0
}

fn non_negative(x: f64) -> bool {
    x.is_finite() && x >= 0.0
}

impl TrainConfig {
    /// Denoising autoencoder recipe: η₀ = 0.05 (0.01 when finetuning).
    pub fn dae() -> Self {
        Self {
            epochs: 200,
            minibatch: 128,
            lr0: 0.05,
            finetune_lr0: 0.01,
            lr_halflife: 5000.0,
            anneal_start: 0.9,
            seed: 0,
            sparsity_lambda: 0.1,
            sparsity_rho: 0.1,
            corrupt_gauss_std: 0.1,
            corrupt_mask_frac: 0.2,
            weight_init_std: 0.01,
            n_chains: None,
        }
    }

    /// GRBM recipe: fixed η = 0.001 with late `1/t` annealing.
    pub fn grbm() -> Self {
        Self {
            lr0: 0.001,
            finetune_lr0: 0.001,
            ..Self::dae()
        }
    }

    /// GDBM recipe: RBM-stack pretraining at 0.001, finetuning at 0.0005.
    pub fn gdbm() -> Self {
        Self {
            lr0: 0.001,
            finetune_lr0: 0.0005,
            ..Self::dae()
        }
    }

    pub fn chains(&self) -> usize {
        self.n_chains.unwrap_or(self.minibatch)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Contract(format!("invalid training config: {what}")));
        if self.minibatch == 0 || self.chains() == 0 {
            return bad("minibatch and chain counts must be at least 1");
        }
        if !positive(self.lr0) || !positive(self.lr_halflife) {
            return bad("lr0 and the half-life must be positive");
        }
        if !non_negative(self.finetune_lr0) {
            return bad("finetune_lr0 must be non-negative");
        }
        for (name, f) in [
            ("corrupt_mask_frac", self.corrupt_mask_frac),
            ("anneal_start", self.anneal_start),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return bad(name);
            }
        }
        if !non_negative(self.corrupt_gauss_std) || !non_negative(self.weight_init_std) {
            return bad("standard deviations must be non-negative");
        }
        Ok(())
    }
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self::dae()
    }
}

/// `η₀ / (1 + t / halflife)`.
pub fn lr_schedule(t: u64, lr0: f64, halflife: f64) -> f64 {
    lr0 / (1.0 + t as f64 / halflife)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phase {
    /// Single-layer DAE training of layer `k` (0-based).
    DaeLayer(usize),
    DaeFinetune,
    Grbm,
    /// RBM `k` of a GDBM pretraining stack.
    RbmLayer(usize),
    GdbmFinetune,
}

impl Phase {
    pub(crate) fn id(self) -> u64 {
        match self {
            Phase::DaeLayer(k) => 100 + k as u64,
            Phase::DaeFinetune => 1,
            Phase::Grbm => 2,
            Phase::RbmLayer(k) => 200 + k as u64,
            Phase::GdbmFinetune => 3,
        }
    }
}

impl fmt::Display for Phase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Phase::DaeLayer(k) => write!(f, "dae-layer{}", k + 1),
            Phase::DaeFinetune => f.write_str("dae-finetune"),
            Phase::Grbm => f.write_str("grbm"),
            Phase::RbmLayer(k) => write!(f, "rbm-layer{}", k + 1),
            Phase::GdbmFinetune => f.write_str("gdbm-finetune"),
        }
    }
}

/// One line of training progress.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EpochRecord {
    pub phase: Phase,
    pub epoch: usize,
    /// Mean per-sample loss (DAE) or reconstruction error (Boltzmann machines).
    pub loss: f64,
    /// Learning rate used by the last update of the epoch.
    pub lr: f64,
}

impl fmt::Display for EpochRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "phase={} epoch={} loss={:.6} lr={:.6e}",
            self.phase, self.epoch, self.loss, self.lr
        )
    }
}

pub(crate) const STREAM_INIT: u64 = 1;
pub(crate) const STREAM_SHUFFLE: u64 = 2;
pub(crate) const STREAM_CORRUPT: u64 = 3;
pub(crate) const STREAM_GIBBS: u64 = 4;

/// Minibatch index lists for one epoch, shuffled from `(seed, phase, epoch)`.
pub(crate) fn epoch_batches(n: usize, minibatch: usize, seed: u64, phase: Phase, epoch: usize) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = stream_rng(seed, mix(&[STREAM_SHUFFLE, phase.id(), epoch as u64]));
    order.shuffle(&mut rng);
    order.chunks(minibatch).map(<[usize]>::to_vec).collect()
}

pub(crate) fn gather_rows(data: &Matrix, idx: &[usize]) -> Matrix {
    Matrix::from_fn(idx.len(), data.cols(), |r, c| data.get(idx[r], c))
}

pub(crate) fn require_data(data: &Matrix) -> Result<()> {
    if data.rows() == 0 || data.cols() == 0 {
        return Err(Error::Data("training corpus is empty".into()));
    }
    if !data.is_finite() {
        return Err(Error::Data("training corpus contains non-finite values".into()));
    }
    Ok(())
}
