//! Named architectures and their training recipes.

use std::fmt;
use std::str::FromStr;

use deepdenoise_core::pipeline::{normalize_rows, NormStats};
use deepdenoise_core::training::{finetune_gdbm, pretrain_gdbm, train_dae, train_grbm};
use deepdenoise_core::{EpochRecord, Matrix, Model, ModelKind, TrainConfig};

use crate::error::{Error, Result};
use crate::io::{ModelFile, Substitutions, TrainingMeta};

/// Model family plus hidden depth, written `grbm`, `gdbm2`, `dae4`, ...
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Architecture {
    pub kind: ModelKind,
    pub depth: usize,
}

/// Architectures accepted by `train`.
pub const ARCHITECTURES: [&str; 6] = ["grbm", "gdbm2", "gdbm4", "dae1", "dae2", "dae4"];

impl Architecture {
    pub fn of(model: &Model) -> Self {
        Self {
            kind: model.kind(),
            depth: model.layer_sizes().len(),
        }
    }

    /// `factor · p²` units in every hidden layer.
    pub fn layer_sizes(self, patch_size: usize, hidden_factor: usize) -> Vec<usize> {
        vec![hidden_factor * patch_size * patch_size; self.depth]
    }

    pub fn recipe(self) -> TrainConfig {
        match self.kind {
            ModelKind::Grbm => TrainConfig::grbm(),
            ModelKind::Gdbm => TrainConfig::gdbm(),
            ModelKind::Dae => TrainConfig::dae(),
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            ModelKind::Grbm => f.write_str("grbm"),
            ModelKind::Gdbm => write!(f, "gdbm{}", self.depth),
            ModelKind::Dae => write!(f, "dae{}", self.depth),
        }
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let arch = |kind, depth| Ok(Architecture { kind, depth });
        match s {
            "grbm" => arch(ModelKind::Grbm, 1),
            "gdbm2" => arch(ModelKind::Gdbm, 2),
            "gdbm4" => arch(ModelKind::Gdbm, 4),
            "dae1" => arch(ModelKind::Dae, 1),
            "dae2" => arch(ModelKind::Dae, 2),
            "dae4" => arch(ModelKind::Dae, 4),
            _ => Err(Error::Usage(format!(
                "unknown model {s:?}; expected one of {}",
                ARCHITECTURES.join(", ")
            ))),
        }
    }
}

/// Standardizes each pixel position of a raw corpus, then trains `arch`.
///
/// GDBMs are pretrained and finetuned for `cfg.epochs` epochs each.
pub fn train_architecture(
    arch: Architecture,
    raw_patches: &Matrix,
    patch_size: usize,
    hidden_factor: usize,
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<ModelFile> {
    if raw_patches.cols() != patch_size * patch_size {
        return Err(Error::Contract("corpus rows do not match the patch size".into()));
    }
    if hidden_factor == 0 {
        return Err(Error::Usage("hidden factor must be at least 1".into()));
    }
    let stats = NormStats::per_pixel(raw_patches)?;
    let data = normalize_rows(raw_patches, &stats)?;
    let sizes = arch.layer_sizes(patch_size, hidden_factor);
    let model = match arch.kind {
        ModelKind::Grbm => Model::Grbm(train_grbm(&data, sizes[0], cfg, log)?),
        ModelKind::Gdbm => {
            let pre = pretrain_gdbm(&data, &sizes, cfg, log)?;
            Model::Gdbm(finetune_gdbm(&data, pre, cfg, log)?)
        }
        ModelKind::Dae => Model::Dae(train_dae(&data, &sizes, cfg, log)?),
    };
    ModelFile::new(
        model,
        TrainingMeta {
            seed: cfg.seed,
            epochs: cfg.epochs as u64,
            substitutions: Substitutions::for_kind(arch.kind),
        },
    )
}
