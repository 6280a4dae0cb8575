use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::ImageBuffer;
use crate::error::{Error, Result};
use crate::math::Matrix;

/// Flattened square patches and their top-left anchors.
#[derive(Debug, Clone, PartialEq)]
pub struct PatchSet {
    /// Side length `p`; each row of `patches` has `p²` entries.
    pub patch_size: usize,
    pub stride: usize,
    /// `[N × p²]`, each patch flattened row-major.
    pub patches: Matrix,
    /// `(row, col)` of each patch's top-left pixel.
    pub positions: Vec<(usize, usize)>,
}

impl PatchSet {
    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    /// Same anchors with replaced patch contents.
    pub fn with_patches(&self, patches: Matrix) -> Result<Self> {
        crate::error::check_len("patch rows", self.len(), patches.rows())?;
        crate::error::check_len("patch width", self.patch_size * self.patch_size, patches.cols())?;
        Ok(Self {
            patches,
            ..self.clone()
        })
    }
}

/// Anchors `0, s, 2s, …` along an axis of `extent` pixels, plus a final
/// anchor flush with the border when the stride does not land on it.
pub fn axis_anchors(extent: usize, p: usize, stride: usize) -> Vec<usize> {
    let last = extent - p;
    let mut out: Vec<usize> = (0..=last).step_by(stride).collect();
    if *out.last().expect("anchor 0 always exists") != last {
        out.push(last);
    }
    out
}

pub fn extract_patches(img: &ImageBuffer, p: usize, stride: usize) -> Result<PatchSet> {
    if p == 0 || p > img.width().min(img.height()) {
        return Err(Error::Contract(format!(
            "patch size {p} does not fit a {}x{} image",
            img.width(),
            img.height()
        )));
    }
    if stride == 0 || stride > p {
        return Err(Error::Contract(format!(
            "stride {stride} must lie in 1..={p} for patches to cover the image"
        )));
    }
    let rows = axis_anchors(img.height(), p, stride);
    let cols = axis_anchors(img.width(), p, stride);
    let mut positions = Vec::with_capacity(rows.len() * cols.len());
    let mut data = Vec::with_capacity(rows.len() * cols.len() * p * p);
    for &r in &rows {
        for &c in &cols {
            positions.push((r, c));
            for dr in 0..p {
                let start = (r + dr) * img.width() + c;
                data.extend_from_slice(&img.pixels()[start..start + p]);
            }
        }
    }
    Ok(PatchSet {
        patch_size: p,
        stride,
        patches: Matrix::from_vec(positions.len(), p * p, data)?,
        positions,
    })
}

/// Overlap-averaged image: per pixel, the sum of covering patch values
/// divided by the number of covering patches. Not clamped.
pub fn reconstruct_unclamped(ps: &PatchSet, width: usize, height: usize) -> Result<ImageBuffer> {
    let p = ps.patch_size;
    crate::error::check_len("patch width", p * p, ps.patches.cols())?;
    crate::error::check_len("patch rows", ps.positions.len(), ps.patches.rows())?;
    let mut num = vec![0.0; width * height];
    let mut den = vec![0u32; width * height];
    for (k, &(r, c)) in ps.positions.iter().enumerate() {
        if r + p > height || c + p > width {
            return Err(Error::Contract(format!(
                "patch anchored at ({r}, {c}) leaves the {width}x{height} image"
            )));
        }
        let patch = ps.patches.row(k);
        for dr in 0..p {
            let base = (r + dr) * width + c;
            for dc in 0..p {
                num[base + dc] += patch[dr * p + dc];
                den[base + dc] += 1;
            }
        }
    }
    if let Some(idx) = den.iter().position(|&d| d == 0) {
        return Err(Error::Coverage {
            row: idx / width,
            col: idx % width,
        });
    }
    let pixels = num.iter().zip(&den).map(|(n, &d)| n / d as f64).collect();
    ImageBuffer::new(width, height, pixels)
}

/// [`reconstruct_unclamped`] followed by a clamp to `[0, 1]`.
pub fn reconstruct_image(ps: &PatchSet, width: usize, height: usize) -> Result<ImageBuffer> {
    let mut img = reconstruct_unclamped(ps, width, height)?;
    img.clamp_unit();
    Ok(img)
}

/// Number of patches covering each pixel.
pub fn coverage_counts(ps: &PatchSet, width: usize, height: usize) -> Vec<u32> {
    let p = ps.patch_size;
    let mut den = vec![0u32; width * height];
    for &(r, c) in &ps.positions {
        for dr in 0..p {
            for dc in 0..p {
                den[(r + dr) * width + c + dc] += 1;
            }
        }
    }
    den
}
