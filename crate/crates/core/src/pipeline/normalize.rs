use alloc::vec;
use alloc::vec::Vec;

use super::PatchSet;
use crate::error::{check_len, Error, Result};
use crate::math::{sqrt, Matrix};

/// Smallest variance used for scaling.
pub const VARIANCE_FLOOR: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormMode {
    /// One mean/variance per pixel position, estimated over a training corpus.
    PerPixel,
    /// A single mean/variance over every patch value of one test image.
    PerImageScalar,
}

#[derive(Debug, Clone, PartialEq)]
pub struct NormStats {
    pub mode: NormMode,
    /// Length `p²` for [`NormMode::PerPixel`], length 1 otherwise.
    pub mean: Vec<f64>,
    /// Variances after flooring at [`VARIANCE_FLOOR`].
    pub variance: Vec<f64>,
    /// Set when any raw variance fell below the floor.
    pub floored: bool,
}

impl NormStats {
    /// Per-column statistics of a training matrix (population variance).
    pub fn per_pixel(data: &Matrix) -> Result<Self> {
        if data.rows() == 0 {
            return Err(Error::Data("cannot estimate statistics of an empty corpus".into()));
        }
        let n = data.rows() as f64;
        let mut mean = vec![0.0; data.cols()];
        for r in 0..data.rows() {
            crate::math::axpy(&mut mean, 1.0, data.row(r));
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut variance = vec![0.0; data.cols()];
        for r in 0..data.rows() {
            for ((v, x), m) in variance.iter_mut().zip(data.row(r)).zip(&mean) {
                *v += (x - m) * (x - m);
            }
        }
        variance.iter_mut().for_each(|v| *v /= n);
        Ok(Self::floored(NormMode::PerPixel, mean, variance))
    }

    /// Scalar statistics over every entry of `data`.
    pub fn per_image(data: &Matrix) -> Result<Self> {
        let xs = data.as_slice();
        if xs.is_empty() {
            return Err(Error::Data("cannot estimate statistics of an empty patch set".into()));
        }
        let n = xs.len() as f64;
        let m = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
        Ok(Self::floored(NormMode::PerImageScalar, vec![m], vec![var]))
    }

    fn floored(mode: NormMode, mean: Vec<f64>, mut variance: Vec<f64>) -> Self {
        let mut floored = false;
        for v in &mut variance {
            if *v < VARIANCE_FLOOR {
                *v = VARIANCE_FLOOR;
                floored = true;
            }
        }
        Self {
            mode,
            mean,
            variance,
            floored,
        }
    }

    fn check(&self, width: usize) -> Result<()> {
        let expected = match self.mode {
            NormMode::PerPixel => width,
            NormMode::PerImageScalar => 1,
        };
        check_len("normalization mean", expected, self.mean.len())?;
        check_len("normalization variance", expected, self.variance.len())
    }

    #[inline]
    fn index(&self, col: usize) -> usize {
        match self.mode {
            NormMode::PerPixel => col,
            NormMode::PerImageScalar => 0,
        }
    }
}

/// `(x - mean) / sqrt(variance)` applied row by row.
pub fn normalize_rows(data: &Matrix, stats: &NormStats) -> Result<Matrix> {
    stats.check(data.cols())?;
    let scale: Vec<f64> = stats.variance.iter().map(|v| 1.0 / sqrt(*v)).collect();
    Ok(Matrix::from_fn(data.rows(), data.cols(), |r, c| {
        let k = stats.index(c);
        (data.get(r, c) - stats.mean[k]) * scale[k]
    }))
}

/// Inverse of [`normalize_rows`].
pub fn denormalize_rows(data: &Matrix, stats: &NormStats) -> Result<Matrix> {
    stats.check(data.cols())?;
    let scale: Vec<f64> = stats.variance.iter().map(|v| sqrt(*v)).collect();
    Ok(Matrix::from_fn(data.rows(), data.cols(), |r, c| {
        let k = stats.index(c);
        data.get(r, c) * scale[k] + stats.mean[k]
    }))
}

pub fn normalize_patches(ps: &PatchSet, stats: &NormStats) -> Result<PatchSet> {
    ps.with_patches(normalize_rows(&ps.patches, stats)?)
}

pub fn denormalize(ps: &PatchSet, stats: &NormStats) -> Result<PatchSet> {
    ps.with_patches(denormalize_rows(&ps.patches, stats)?)
}
