use core::fmt;
use core::str::FromStr;

use alloc::format;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::ImageBuffer;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum NoiseKind {
    /// Additive zero-mean Gaussian; the level is the standard deviation.
    WhiteGaussian,
    /// Pixels hit with probability `level`, then forced to black or white.
    SaltPepper,
}

impl NoiseKind {
    pub fn name(self) -> &'static str {
        match self {
            NoiseKind::WhiteGaussian => "gaussian",
            NoiseKind::SaltPepper => "saltpepper",
        }
    }
}

impl fmt::Display for NoiseKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for NoiseKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "gaussian" | "white-gaussian" | "white" => Ok(NoiseKind::WhiteGaussian),
            "saltpepper" | "salt-and-pepper" | "sp" => Ok(NoiseKind::SaltPepper),
            other => Err(Error::Contract(format!("unknown noise kind '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    pub kind: NoiseKind,
    pub level: f64,
}

impl NoiseSpec {
    pub fn new(kind: NoiseKind, level: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&level) {
            return Err(Error::Contract(format!("noise level {level} outside [0, 1]")));
        }
        Ok(Self { kind, level })
    }
}

/// Corrupts `img` without the final clamp (salt-and-pepper is in range anyway).
pub fn inject_noise_raw<R: Rng + ?Sized>(img: &ImageBuffer, spec: NoiseSpec, rng: &mut R) -> ImageBuffer {
    let mut out = img.clone();
    match spec.kind {
        NoiseKind::WhiteGaussian => {
            for x in out.pixels_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *x += spec.level * z;
            }
        }
        NoiseKind::SaltPepper => {
            for x in out.pixels_mut() {
                if rng.random::<f64>() < spec.level {
                    *x = if rng.random_bool(0.5) { 1.0 } else { 0.0 };
                }
            }
        }
    }
    out
}

/// Corrupts `img` and clamps to `[0, 1]`.
pub fn inject_noise<R: Rng + ?Sized>(img: &ImageBuffer, spec: NoiseSpec, rng: &mut R) -> ImageBuffer {
    let mut out = inject_noise_raw(img, spec, rng);
    out.clamp_unit();
    out
}
