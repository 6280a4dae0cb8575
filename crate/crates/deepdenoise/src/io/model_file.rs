//! Versioned little-endian model files; the byte layout is documented in
//! `docs/model_format.md`.

use std::fs;
use std::path::Path;

use deepdenoise_core::{DaeParams, GdbmParams, GrbmParams, Model, ModelKind};
use serde::Serialize;

use crate::error::{Error, Result};

pub const MAGIC: &[u8; 8] = b"DDNMODEL";
pub const FORMAT_VERSION: u32 = 1;

/// Parts of the reference training recipe replaced by simpler procedures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(into = "Vec<&'static str>")]
pub struct Substitutions(pub u32);

impl Substitutions {
    /// Plain PCD gradient instead of the enhanced gradient.
    pub const ENHANCED_GRADIENT: u32 = 1;
    /// Fixed learning rate with late annealing instead of an adaptive rate.
    pub const ADAPTIVE_LR: u32 = 1 << 1;
    /// Plain persistent chains instead of coupled adaptive simulated tempering.
    pub const TEMPERING: u32 = 1 << 2;
    /// Greedy RBM stacking instead of two-stage pretraining.
    pub const TWO_STAGE_PRETRAINING: u32 = 1 << 3;

    const NAMES: [(u32, &'static str); 4] = [
        (Self::ENHANCED_GRADIENT, "enhanced_gradient->pcd_gradient"),
        (Self::ADAPTIVE_LR, "adaptive_lr->fixed_lr_with_annealing"),
        (Self::TEMPERING, "cast->pcd"),
        (Self::TWO_STAGE_PRETRAINING, "two_stage_pretraining->greedy_rbm_stack"),
    ];

    pub fn for_kind(kind: ModelKind) -> Self {
        match kind {
            ModelKind::Grbm => Self(Self::ENHANCED_GRADIENT | Self::ADAPTIVE_LR),
            ModelKind::Gdbm => Self(
                Self::ENHANCED_GRADIENT | Self::ADAPTIVE_LR | Self::TEMPERING | Self::TWO_STAGE_PRETRAINING,
            ),
            ModelKind::Dae => Self(0),
        }
    }

    pub fn names(self) -> Vec<&'static str> {
        Self::NAMES
            .iter()
            .filter(|(bit, _)| self.0 & bit != 0)
            .map(|(_, n)| *n)
            .collect()
    }
}

impl From<Substitutions> for Vec<&'static str> {
    fn from(s: Substitutions) -> Self {
        s.names()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct TrainingMeta {
    pub seed: u64,
    pub epochs: u64,
    pub substitutions: Substitutions,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModelFile {
    pub model: Model,
    pub patch_size: usize,
    pub meta: TrainingMeta,
}

fn kind_tag(kind: ModelKind) -> u8 {
    match kind {
        ModelKind::Grbm => 1,
        ModelKind::Gdbm => 2,
        ModelKind::Dae => 3,
    }
}

fn sigma2(model: &Model) -> f64 {
    match model {
        Model::Grbm(p) => p.sigma2,
        Model::Gdbm(p) => p.sigma2,
        Model::Dae(_) => 0.0,
    }
}

fn n_visible(model: &Model) -> usize {
    match model {
        Model::Grbm(p) => p.n_visible(),
        Model::Gdbm(p) => p.n_visible(),
        Model::Dae(p) => p.n_visible(),
    }
}

impl ModelFile {
    pub fn new(model: Model, meta: TrainingMeta) -> Result<Self> {
        model.validate()?;
        let nv = n_visible(&model);
        let patch_size = (1..=nv).find(|p| p * p == nv).ok_or_else(|| {
            Error::Contract(format!("{nv} visible units do not form a square patch"))
        })?;
        Ok(Self {
            model,
            patch_size,
            meta,
        })
    }

    pub fn kind(&self) -> ModelKind {
        self.model.kind()
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let sizes = self.model.layer_sizes();
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
        out.extend_from_slice(&[kind_tag(self.kind()), 0, 0, 0]);
        for n in [self.patch_size, n_visible(&self.model), sizes.len()] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for n in &sizes {
            out.extend_from_slice(&(*n as u32).to_le_bytes());
        }
        out.extend_from_slice(&self.meta.seed.to_le_bytes());
        out.extend_from_slice(&self.meta.epochs.to_le_bytes());
        out.extend_from_slice(&self.meta.substitutions.0.to_le_bytes());
        out.extend_from_slice(&sigma2(&self.model).to_le_bytes());
        for t in self.model.tensors() {
            for x in t {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Persistence("not a model file (bad magic)".into()));
        }
        let version = r.u32()?;
        if version != FORMAT_VERSION {
            return Err(Error::Persistence(format!(
                "format version {version} is not supported (expected {FORMAT_VERSION})"
            )));
        }
        let kind = match r.take(4)?[0] {
            1 => ModelKind::Grbm,
            2 => ModelKind::Gdbm,
            3 => ModelKind::Dae,
            t => return Err(Error::Persistence(format!("unknown model kind tag {t}"))),
        };
        let patch_size = r.u32()? as usize;
        let nv = r.u32()? as usize;
        let depth = r.u32()? as usize;
        if depth > 64 || nv != patch_size * patch_size {
            return Err(Error::Persistence("inconsistent model header".into()));
        }
        let sizes: Vec<usize> = (0..depth).map(|_| r.u32().map(|n| n as usize)).collect::<Result<_>>()?;
        let meta = TrainingMeta {
            seed: r.u64()?,
            epochs: r.u64()?,
            substitutions: Substitutions(r.u32()?),
        };
        let s2 = f64::from_bits(r.u64()?);
        let mut model = empty_model(kind, nv, &sizes, s2)?;
        let expected: usize = model.tensors().iter().map(|t| t.len()).sum();
        if bytes.len() != r.pos + expected * 8 + 4 {
            return Err(Error::Persistence(format!(
                "truncated or oversized model file: {} bytes, expected {}",
                bytes.len(),
                r.pos + expected * 8 + 4
            )));
        }
        let body_end = bytes.len() - 4;
        let stored = u32::from_le_bytes(bytes[body_end..].try_into().expect("four bytes"));
        if crc32fast::hash(&bytes[..body_end]) != stored {
            return Err(Error::Persistence("checksum mismatch".into()));
        }
        for t in tensors_mut(&mut model) {
            for x in t.iter_mut() {
                *x = f64::from_bits(r.u64()?);
            }
        }
        model
            .validate()
            .map_err(|e| Error::Persistence(format!("invalid parameters: {e}")))?;
        Ok(Self {
            model,
            patch_size,
            meta,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        Self::from_bytes(&bytes).map_err(|e| match e {
            Error::Persistence(m) => Error::Persistence(format!("{}: {m}", path.display())),
            other => other,
        })
    }

    /// Loads and rejects files holding a different model family.
    pub fn load_as(path: &Path, kind: ModelKind) -> Result<Self> {
        let file = Self::load(path)?;
        if file.kind() != kind {
            return Err(Error::Persistence(format!(
                "{}: expected a {} model, found {}",
                path.display(),
                kind.name(),
                file.kind().name()
            )));
        }
        Ok(file)
    }
}

fn empty_model(kind: ModelKind, nv: usize, sizes: &[usize], s2: f64) -> Result<Model> {
    let bad = || Error::Persistence("layer sizes do not fit the model kind".into());
    if sizes.is_empty() || sizes.contains(&0) || nv == 0 {
        return Err(bad());
    }
    Ok(match kind {
        ModelKind::Grbm if sizes.len() == 1 => {
            let mut p = GrbmParams::zeros(nv, sizes[0]);
            p.sigma2 = s2;
            Model::Grbm(p)
        }
        ModelKind::Gdbm if sizes.len() >= 2 => {
            let mut p = GdbmParams::zeros(nv, sizes);
            p.sigma2 = s2;
            Model::Gdbm(p)
        }
        ModelKind::Dae => Model::Dae(DaeParams::zeros(nv, sizes)),
        _ => return Err(bad()),
    })
}

fn tensors_mut(model: &mut Model) -> Vec<&mut [f64]> {
    match model {
        Model::Grbm(p) => p.tensors_mut(),
        Model::Gdbm(p) => p.tensors_mut(),
        Model::Dae(p) => p.tensors_mut(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos + n;
        let s = self.bytes.get(self.pos..end).ok_or_else(|| {
            Error::Persistence(format!("truncated model file at byte {}", self.pos))
        })?;
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("four bytes")))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("eight bytes")))
    }
}
