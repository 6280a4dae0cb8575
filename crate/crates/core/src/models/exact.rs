//! Brute-force enumeration over hidden configurations for small models.
//!
//! Used as a reference for the tractable and mean-field inference routines
//! and for exact likelihoods at toy scale. The visible units are integrated
//! analytically (they are Gaussian given the first hidden layer).

use alloc::vec;
use alloc::vec::Vec;
use core::f64::consts::PI;

use crate::error::{check_len, Error, Result};
use crate::math::{dot, exp, ln, log_sum_exp, Matrix};
use crate::models::gdbm::GdbmParams;
use crate::models::grbm::GrbmParams;

/// Largest total number of hidden units accepted for enumeration.
pub const MAX_ENUM_HIDDEN: usize = 20;

struct Layered<'a> {
    weights: &'a Matrix,
    inter: &'a [Matrix],
    visible_bias: &'a [f64],
    hidden_bias: Vec<&'a [f64]>,
    sigma2: f64,
}

impl<'a> Layered<'a> {
    fn from_gdbm(p: &'a GdbmParams) -> Self {
        Self {
            weights: &p.weights,
            inter: &p.inter,
            visible_bias: &p.visible_bias,
            hidden_bias: p.hidden_bias.iter().map(Vec::as_slice).collect(),
            sigma2: p.sigma2,
        }
    }

    fn from_grbm(p: &'a GrbmParams) -> Self {
        Self {
            weights: &p.weights,
            inter: &[],
            visible_bias: &p.visible_bias,
            hidden_bias: vec![&p.hidden_bias],
            sigma2: p.sigma2,
        }
    }

    fn total_hidden(&self) -> usize {
        self.hidden_bias.iter().map(|c| c.len()).sum()
    }

    fn check_capacity(&self) -> Result<()> {
        let hidden = self.total_hidden();
        if hidden > MAX_ENUM_HIDDEN {
            return Err(Error::Capacity {
                hidden,
                max: MAX_ENUM_HIDDEN,
            });
        }
        Ok(())
    }

    /// Unpacks configuration index `idx` into per-layer binary vectors.
    fn config(&self, idx: u32) -> Vec<Vec<f64>> {
        let mut bit = 0;
        self.hidden_bias
            .iter()
            .map(|c| {
                (0..c.len())
                    .map(|_| {
                        let b = (idx >> bit) & 1;
                        bit += 1;
                        b as f64
                    })
                    .collect()
            })
            .collect()
    }

    /// Terms of `-E` that do not involve `v`.
    fn hidden_only(&self, h: &[Vec<f64>]) -> f64 {
        let biases: f64 = h.iter().zip(&self.hidden_bias).map(|(hl, c)| dot(hl, c)).sum();
        let inter: f64 = self
            .inter
            .iter()
            .enumerate()
            .map(|(l, u)| dot(&u.t_mul_vec(&h[l]), &h[l + 1]))
            .sum();
        biases + inter
    }

    fn neg_energy(&self, v: &[f64], h: &[Vec<f64>]) -> f64 {
        let s2 = self.sigma2;
        let quad: f64 = v
            .iter()
            .zip(self.visible_bias)
            .map(|(x, b)| -(x - b) * (x - b) / (2.0 * s2))
            .sum();
        quad + dot(&self.weights.t_mul_vec(v), &h[0]) / s2 + self.hidden_only(h)
    }

    /// `ln ∫ exp(-E(v, h)) dv` for a fixed hidden configuration.
    fn log_visible_integral(&self, h: &[Vec<f64>]) -> f64 {
        let s2 = self.sigma2;
        let n = self.visible_bias.len() as f64;
        let shifted = self.weights.mul_vec(&h[0]);
        let mut quad = 0.0;
        for (a, b) in shifted.iter().zip(self.visible_bias) {
            quad += (b + a) * (b + a) - b * b;
        }
        quad / (2.0 * s2) + self.hidden_only(h) + 0.5 * n * ln(2.0 * PI * s2)
    }

    fn configs(&self) -> u32 {
        1u32 << self.total_hidden()
    }

    fn posterior(&self, v: &[f64]) -> Result<Vec<Vec<f64>>> {
        check_len("visible vector", self.visible_bias.len(), v.len())?;
        self.check_capacity()?;
        let states: Vec<Vec<Vec<f64>>> = (0..self.configs()).map(|i| self.config(i)).collect();
        let logw: Vec<f64> = states.iter().map(|h| self.neg_energy(v, h)).collect();
        let lz = log_sum_exp(&logw);
        let mut marg: Vec<Vec<f64>> = self.hidden_bias.iter().map(|c| vec![0.0; c.len()]).collect();
        for (h, lw) in states.iter().zip(&logw) {
            let p = exp(lw - lz);
            for (m, hl) in marg.iter_mut().zip(h) {
                for (mj, hj) in m.iter_mut().zip(hl) {
                    *mj += p * hj;
                }
            }
        }
        Ok(marg)
    }

    fn log_partition(&self) -> Result<f64> {
        self.check_capacity()?;
        let terms: Vec<f64> = (0..self.configs())
            .map(|i| self.log_visible_integral(&self.config(i)))
            .collect();
        Ok(log_sum_exp(&terms))
    }

    fn log_unnormalized(&self, v: &[f64]) -> Result<f64> {
        check_len("visible vector", self.visible_bias.len(), v.len())?;
        self.check_capacity()?;
        let terms: Vec<f64> = (0..self.configs())
            .map(|i| self.neg_energy(v, &self.config(i)))
            .collect();
        Ok(log_sum_exp(&terms))
    }
}

/// Exact `p(h^(l)_j = 1 | v)` for every hidden unit of a small GDBM.
pub fn exact_posterior_small(v: &[f64], params: &GdbmParams) -> Result<Vec<Vec<f64>>> {
    Layered::from_gdbm(params).posterior(v)
}

/// Exact hidden marginals of a small GRBM, by enumeration.
pub fn exact_posterior_grbm(v: &[f64], params: &GrbmParams) -> Result<Vec<f64>> {
    Ok(Layered::from_grbm(params).posterior(v)?.swap_remove(0))
}

/// `ln Z(Θ)` of a small GDBM.
pub fn gdbm_log_partition(params: &GdbmParams) -> Result<f64> {
    Layered::from_gdbm(params).log_partition()
}

/// `ln Z(Θ)` of a small GRBM.
pub fn grbm_log_partition(params: &GrbmParams) -> Result<f64> {
    Layered::from_grbm(params).log_partition()
}

/// Mean exact log-likelihood `ln p(v)` over `data` (one row per sample).
pub fn gdbm_log_likelihood(data: &Matrix, params: &GdbmParams) -> Result<f64> {
    let layered = Layered::from_gdbm(params);
    let lz = layered.log_partition()?;
    let mut total = 0.0;
    for r in 0..data.rows() {
        total += layered.log_unnormalized(data.row(r))? - lz;
    }
    Ok(total / data.rows().max(1) as f64)
}

/// Exact model-side statistics of a small GRBM: `E[v hᵀ]`, `E[v]` and `E[h]`.
pub fn grbm_model_moments(params: &GrbmParams) -> Result<(Matrix, Vec<f64>, Vec<f64>)> {
    let layered = Layered::from_grbm(params);
    let lz = layered.log_partition()?;
    let (nv, nh) = (params.n_visible(), params.n_hidden());
    let mut vh = Matrix::zeros(nv, nh);
    let mut ev = vec![0.0; nv];
    let mut eh = vec![0.0; nh];
    for i in 0..layered.configs() {
        let h = layered.config(i);
        let p = exp(layered.log_visible_integral(&h) - lz);
        let mut mean_v = params.weights.mul_vec(&h[0]);
        for (m, b) in mean_v.iter_mut().zip(&params.visible_bias) {
            *m += b;
        }
        vh.add_outer(p, &mean_v, &h[0]);
        crate::math::axpy(&mut ev, p, &mean_v);
        crate::math::axpy(&mut eh, p, &h[0]);
    }
    Ok((vh, ev, eh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::sigmoid;

    #[test]
    fn factorized_case_is_sigmoid_of_bias() {
        let mut p = GdbmParams::zeros(2, &[2, 3]);
        p.hidden_bias = vec![vec![0.3, -2.0], vec![1.0, 0.0, 0.5]];
        let m = exact_posterior_small(&[1.0, 2.0], &p).unwrap();
        for (mj, c) in m.iter().flatten().zip(p.hidden_bias.iter().flatten()) {
            assert!((mj - sigmoid(*c)).abs() < 1e-14);
        }
        let half = exact_posterior_small(&[1.0, 2.0], &GdbmParams::zeros(2, &[2, 2])).unwrap();
        assert!(half.iter().flatten().all(|&x| (x - 0.5).abs() < 1e-15));
    }

    #[test]
    fn capacity_is_enforced() {
        let p = GdbmParams::zeros(2, &[11, 10]);
        assert!(matches!(
            exact_posterior_small(&[0.0, 0.0], &p),
            Err(Error::Capacity { hidden: 21, max: 20 })
        ));
    }

    #[test]
    fn zero_model_partition_is_gaussian_times_hidden_count() {
        let p = GdbmParams::zeros(3, &[2, 1]);
        let expect = 3.0 * ln(2.0) + 1.5 * ln(2.0 * PI);
        assert!((gdbm_log_partition(&p).unwrap() - expect).abs() < 1e-12);
    }
}
