//! Random patch corpora sampled from an image directory.

use std::fs;
use std::path::{Path, PathBuf};

use deepdenoise_core::rng::{mix, stream_rng};
use deepdenoise_core::{ImageBuffer, Matrix};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::load_image;
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"DDNCORP1";
const CORPUS_STREAM: u64 = 0xC0_4250;

/// Extensions recognised when scanning an image directory.
pub const IMAGE_EXTENSIONS: [&str; 4] = ["pgm", "ppm", "pnm", "png"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Anchor {
    /// Index into [`CorpusManifest::files`].
    pub file: usize,
    pub row: usize,
    pub col: usize,
}

/// Everything needed to regenerate a corpus from the image directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusManifest {
    pub image_dir: PathBuf,
    /// File names relative to `image_dir`, sorted.
    pub files: Vec<String>,
    pub patch_size: usize,
    pub n_patches: usize,
    pub per_image: usize,
    pub seed: u64,
    pub anchors: Vec<Anchor>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PatchCorpus {
    pub patch_size: usize,
    /// `[N × p²]` raw pixel values.
    pub patches: Matrix,
}

/// Sorted image files directly inside `dir`.
pub fn list_images(dir: &Path) -> Result<Vec<PathBuf>> {
    let entries = fs::read_dir(dir).map_err(|e| Error::Data(format!("{}: {e}", dir.display())))?;
    let mut files: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| IMAGE_EXTENSIONS.iter().any(|x| x.eq_ignore_ascii_case(e)))
        })
        .collect();
    files.sort();
    if files.is_empty() {
        return Err(Error::Data(format!("{} contains no images", dir.display())));
    }
    Ok(files)
}

fn copy_patch(img: &ImageBuffer, p: usize, row: usize, col: usize, out: &mut [f64]) {
    for dr in 0..p {
        let start = (row + dr) * img.width() + col;
        out[dr * p..(dr + 1) * p].copy_from_slice(&img.pixels()[start..start + p]);
    }
}

/// Samples `n_patches` patches of side `p`: the images are visited in name
/// order, repeatedly, and each visit draws `per_image` uniformly random
/// anchors. Images smaller than `p` are skipped.
pub fn sample_patch_corpus(
    dir: &Path,
    n_patches: usize,
    p: usize,
    per_image: usize,
    seed: u64,
) -> Result<(PatchCorpus, CorpusManifest)> {
    if p == 0 || per_image == 0 || n_patches == 0 {
        return Err(Error::Usage("patch size, per-image count and corpus size must be positive".into()));
    }
    let paths = list_images(dir)?;
    let images: Vec<ImageBuffer> = paths.iter().map(|f| load_image(f)).collect::<Result<_>>()?;
    let usable: Vec<usize> = (0..images.len())
        .filter(|&k| images[k].width() >= p && images[k].height() >= p)
        .collect();
    if usable.is_empty() {
        return Err(Error::Data(format!("no image in {} is at least {p}x{p}", dir.display())));
    }
    let mut rng = stream_rng(seed, mix(&[CORPUS_STREAM]));
    let mut anchors = Vec::with_capacity(n_patches);
    'outer: for &k in usable.iter().cycle() {
        let img = &images[k];
        for _ in 0..per_image {
            if anchors.len() == n_patches {
                break 'outer;
            }
            anchors.push(Anchor {
                file: k,
                row: rng.random_range(0..=img.height() - p),
                col: rng.random_range(0..=img.width() - p),
            });
        }
    }
    let manifest = CorpusManifest {
        image_dir: dir.to_path_buf(),
        files: paths
            .iter()
            .map(|f| f.file_name().expect("listed files have names").to_string_lossy().into_owned())
            .collect(),
        patch_size: p,
        n_patches,
        per_image,
        seed,
        anchors,
    };
    let corpus = extract(&images, &manifest);
    Ok((corpus, manifest))
}

fn extract(images: &[ImageBuffer], manifest: &CorpusManifest) -> PatchCorpus {
    let p = manifest.patch_size;
    let mut patches = Matrix::zeros(manifest.anchors.len(), p * p);
    for (r, a) in manifest.anchors.iter().enumerate() {
        copy_patch(&images[a.file], p, a.row, a.col, patches.row_mut(r));
    }
    PatchCorpus { patch_size: p, patches }
}

impl CorpusManifest {
    /// Re-extracts the corpus from the listed files and anchors.
    pub fn regenerate(&self) -> Result<PatchCorpus> {
        let images: Vec<ImageBuffer> = self
            .files
            .iter()
            .map(|f| load_image(&self.image_dir.join(f)))
            .collect::<Result<_>>()?;
        for a in &self.anchors {
            let img = images
                .get(a.file)
                .ok_or_else(|| Error::Persistence(format!("anchor refers to missing file {}", a.file)))?;
            if a.row + self.patch_size > img.height() || a.col + self.patch_size > img.width() {
                return Err(Error::Persistence("anchor lies outside its image".into()));
            }
        }
        Ok(extract(&images, self))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let json = serde_json::to_vec_pretty(self).expect("manifest serializes");
        fs::write(path, json).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_slice(&bytes).map_err(|e| Error::Persistence(format!("{}: {e}", path.display())))
    }
}

/// Path of the JSON manifest written next to a corpus file.
pub fn manifest_path(corpus: &Path) -> PathBuf {
    let mut s = corpus.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

impl PatchCorpus {
    /// `DDNCORP1`, patch size (u32), patch count (u64), little-endian f64
    /// rows, then a CRC-32 of everything before it.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(24 + self.patches.as_slice().len() * 8);
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.patch_size as u32).to_le_bytes());
        out.extend_from_slice(&(self.patches.rows() as u64).to_le_bytes());
        for x in self.patches.as_slice() {
            out.extend_from_slice(&x.to_le_bytes());
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 24 || &bytes[..8] != MAGIC {
            return Err(Error::Persistence("not a patch corpus file".into()));
        }
        let p = u32::from_le_bytes(bytes[8..12].try_into().expect("four bytes")) as usize;
        let n = u64::from_le_bytes(bytes[12..20].try_into().expect("eight bytes")) as usize;
        let values = n
            .checked_mul(p * p)
            .filter(|v| bytes.len() == 20 + v * 8 + 4)
            .ok_or_else(|| Error::Persistence("corpus file is truncated".into()))?;
        let body_end = bytes.len() - 4;
        if crc32fast::hash(&bytes[..body_end]) != u32::from_le_bytes(bytes[body_end..].try_into().expect("four bytes")) {
            return Err(Error::Persistence("corpus checksum mismatch".into()));
        }
        let data: Vec<f64> = bytes[20..20 + values * 8]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("eight bytes")))
            .collect();
        Ok(Self {
            patch_size: p,
            patches: Matrix::from_vec(n, p * p, data)?,
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
}
