//! Gaussian-Bernoulli restricted Boltzmann machine.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{sigmoid, Matrix};

/// Parameters of a GRBM: Gaussian visibles with one shared variance and a
/// single layer of binary hidden units.
#[derive(Debug, Clone, PartialEq)]
pub struct GrbmParams {
    /// `w_ij`, shape `[n_visible × n_hidden]`.
    pub weights: Matrix,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
    pub sigma2: f64,
}

impl GrbmParams {
    pub fn new(
        weights: Matrix,
        visible_bias: Vec<f64>,
        hidden_bias: Vec<f64>,
        sigma2: f64,
    ) -> Result<Self> {
        let p = Self {
            weights,
            visible_bias,
            hidden_bias,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// All parameters zero, `sigma2 = 1`.
    pub fn zeros(n_visible: usize, n_hidden: usize) -> Self {
        Self {
            weights: Matrix::zeros(n_visible, n_hidden),
            visible_bias: vec![0.0; n_visible],
            hidden_bias: vec![0.0; n_hidden],
            sigma2: 1.0,
        }
    }

    /// Weights from `N(0, weight_std^2)`, zero biases, unit variance.
    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        n_hidden: usize,
        weight_std: f64,
        rng: &mut R,
    ) -> Self {
        Self {
            weights: Matrix::random_normal(n_visible, n_hidden, weight_std, rng),
            ..Self::zeros(n_visible, n_hidden)
        }
    }

    #[inline]
    pub fn n_visible(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn n_hidden(&self) -> usize {
        self.weights.cols()
    }

    pub fn validate(&self) -> Result<()> {
        check_len("visible bias", self.n_visible(), self.visible_bias.len())?;
        check_len("hidden bias", self.n_hidden(), self.hidden_bias.len())?;
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma2 must be positive and finite, got {}",
                self.sigma2
            )));
        }
        let finite = self.weights.is_finite()
            && self.visible_bias.iter().all(|x| x.is_finite())
            && self.hidden_bias.iter().all(|x| x.is_finite());
        if !finite {
            return Err(Error::InvalidParams("non-finite GRBM parameter".into()));
        }
        Ok(())
    }

    /// Flat views of every tensor, in persistence order: W, b, c.
    pub fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.weights.as_slice(),
            &self.visible_bias,
            &self.hidden_bias,
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        vec![
            self.weights.as_mut_slice(),
            &mut self.visible_bias,
            &mut self.hidden_bias,
        ]
    }

    /// Hidden pre-activations `Wᵀ v / σ² + c` scaled on the weight term by `up`.
    pub(crate) fn hidden_input(&self, v: &[f64], up: f64, out: &mut [f64]) {
        self.weights.t_mul_vec_into(v, out);
        let s = up / self.sigma2;
        for (o, c) in out.iter_mut().zip(&self.hidden_bias) {
            *o = *o * s + c;
        }
    }

    pub(crate) fn hidden_probs_into(&self, v: &[f64], out: &mut [f64]) {
        self.hidden_input(v, 1.0, out);
        out.iter_mut().for_each(|x| *x = sigmoid(*x));
    }

    pub(crate) fn visible_mean_into(&self, h: &[f64], out: &mut [f64]) {
        self.weights.mul_vec_into(h, out);
        for (o, b) in out.iter_mut().zip(&self.visible_bias) {
            *o += b;
        }
    }
}

/// `p(h_j = 1 | v) = f(sum_i w_ij v_i / σ² + c_j)`.
pub fn rbm_hidden_conditional(v: &[f64], params: &GrbmParams) -> Result<Vec<f64>> {
    check_len("visible vector", params.n_visible(), v.len())?;
    let mut out = vec![0.0; params.n_hidden()];
    params.hidden_probs_into(v, &mut out);
    Ok(out)
}

/// Mean of `p(v | h)` evaluated at `h = h_mean`: `W h_mean + b`.
pub fn grbm_visible_mean(h_mean: &[f64], params: &GrbmParams) -> Result<Vec<f64>> {
    check_len("hidden vector", params.n_hidden(), h_mean.len())?;
    let mut out = vec![0.0; params.n_visible()];
    params.visible_mean_into(h_mean, &mut out);
    Ok(out)
}

/// Exact posterior mean of the hidden layer pushed through the linear visible mean.
pub fn grbm_denoise_patch(noisy: &[f64], params: &GrbmParams) -> Result<Vec<f64>> {
    let h = rbm_hidden_conditional(noisy, params)?;
    grbm_visible_mean(&h, params)
}
