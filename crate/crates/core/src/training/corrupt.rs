use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::TrainConfig;
use crate::math::Matrix;

/// Components zeroed per sample: `⌊frac · n⌋`.
pub fn mask_count(frac: f64, n: usize) -> usize {
    // The epsilon absorbs representation error such as 0.29 * 100 = 28.999…
    crate::math::floor((frac * n as f64) + 1e-9).min(n as f64) as usize
}

/// The corruption `η(·)` with the config's noise settings.
pub fn corrupt_input<R: Rng + ?Sized>(batch: &Matrix, cfg: &TrainConfig, rng: &mut R) -> Matrix {
    corrupt_with(batch, cfg.corrupt_gauss_std, cfg.corrupt_mask_frac, rng)
}

/// Adds i.i.d. `N(0, gauss_std²)` to every component, then zeroes exactly
/// `⌊mask_frac · n⌋` uniformly chosen components of each row.
pub fn corrupt_with<R: Rng + ?Sized>(batch: &Matrix, gauss_std: f64, mask_frac: f64, rng: &mut R) -> Matrix {
    let mut out = batch.clone();
    let n = batch.cols();
    let k = mask_count(mask_frac, n);
    for r in 0..out.rows() {
        let row = out.row_mut(r);
        if gauss_std > 0.0 {
            for x in row.iter_mut() {
                let z: f64 = StandardNormal.sample(rng);
                *x += gauss_std * z;
            }
        }
        if k > 0 {
            for i in index::sample(rng, n, k) {
                row[i] = 0.0;
            }
        }
    }
    out
}
