//! Stacked denoising autoencoder with tied encoder/decoder weights.
//!
//! Layer `k` (0-based) owns one weight matrix `[N_k × N_{k+1}]` with
//! `N_0 = n_visible`. The encoder uses it as `σ(Wᵀ h + e)` and the decoder
//! as `σ(W g + d)`; the decoder's visible output is affine.

use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{sigmoid, Matrix};

#[derive(Debug, Clone, PartialEq)]
pub struct DaeParams {
    /// Tied weights, one per layer transition.
    pub weights: Vec<Matrix>,
    /// Encoder biases; `enc_bias[k]` has length `N_{k+1}`.
    pub enc_bias: Vec<Vec<f64>>,
    /// Decoder biases; `dec_bias[0]` is the visible bias, `dec_bias[k]` has length `N_k`.
    pub dec_bias: Vec<Vec<f64>>,
}

/// Activation applied to a decoder's bottom layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutputActivation {
    Linear,
    Sigmoid,
}

/// Read-only view of one tied layer as seen by the decoder.
pub struct DecoderLayer<'a> {
    pub weights: &'a Matrix,
    pub bias: &'a [f64],
}

/// Mutable view of one tied layer as seen by the encoder.
pub struct EncoderLayerMut<'a> {
    pub weights: &'a mut Matrix,
    pub bias: &'a mut [f64],
}

impl DaeParams {
    pub fn zeros(n_visible: usize, layer_sizes: &[usize]) -> Self {
        let mut sizes = vec![n_visible];
        sizes.extend_from_slice(layer_sizes);
        Self {
            weights: sizes.windows(2).map(|w| Matrix::zeros(w[0], w[1])).collect(),
            enc_bias: layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            dec_bias: sizes[..layer_sizes.len()].iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        layer_sizes: &[usize],
        weight_std: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(n_visible, layer_sizes);
        for w in &mut p.weights {
            *w = Matrix::random_normal(w.rows(), w.cols(), weight_std, rng);
        }
        p
    }

    pub fn new(weights: Vec<Matrix>, enc_bias: Vec<Vec<f64>>, dec_bias: Vec<Vec<f64>>) -> Result<Self> {
        let p = Self {
            weights,
            enc_bias,
            dec_bias,
        };
        p.validate()?;
        Ok(p)
    }

    #[inline]
    pub fn n_visible(&self) -> usize {
        self.weights[0].rows()
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.weights.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.weights.iter().map(Matrix::cols).collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.weights.is_empty() {
            return Err(Error::InvalidParams("a DAE needs at least one hidden layer".into()));
        }
        let depth = self.depth();
        check_len("encoder bias count", depth, self.enc_bias.len())?;
        check_len("decoder bias count", depth, self.dec_bias.len())?;
        for k in 0..depth {
            let w = &self.weights[k];
            if k > 0 {
                check_len("chained layer size", self.weights[k - 1].cols(), w.rows())?;
            }
            check_len("encoder bias", w.cols(), self.enc_bias[k].len())?;
            check_len("decoder bias", w.rows(), self.dec_bias[k].len())?;
        }
        if !self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())) {
            return Err(Error::InvalidParams("non-finite DAE parameter".into()));
        }
        Ok(())
    }

    /// Flat views in persistence order: all W, all encoder biases, all decoder biases.
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = self.weights.iter().map(Matrix::as_slice).collect();
        t.extend(self.enc_bias.iter().map(Vec::as_slice));
        t.extend(self.dec_bias.iter().map(Vec::as_slice));
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = self.weights.iter_mut().map(Matrix::as_mut_slice).collect();
        t.extend(self.enc_bias.iter_mut().map(Vec::as_mut_slice));
        t.extend(self.dec_bias.iter_mut().map(Vec::as_mut_slice));
        t
    }

    pub fn encoder_layer_mut(&mut self, k: usize) -> EncoderLayerMut<'_> {
        EncoderLayerMut {
            weights: &mut self.weights[k],
            bias: &mut self.enc_bias[k],
        }
    }

    pub fn decoder_layer(&self, k: usize) -> DecoderLayer<'_> {
        DecoderLayer {
            weights: &self.weights[k],
            bias: &self.dec_bias[k],
        }
    }

    /// Activations of every encoder layer, `acts[0] = v`.
    pub(crate) fn encode_all(&self, v: &[f64]) -> Vec<Vec<f64>> {
        let mut acts = Vec::with_capacity(self.depth() + 1);
        acts.push(v.to_vec());
        for k in 0..self.depth() {
            let mut h = self.weights[k].t_mul_vec(&acts[k]);
            for (x, e) in h.iter_mut().zip(&self.enc_bias[k]) {
                *x = sigmoid(*x + e);
            }
            acts.push(h);
        }
        acts
    }

    /// Decoder activations from the top code down, `out[0]` is the reconstruction.
    pub(crate) fn decode_all(&self, top: &[f64], output: OutputActivation) -> Vec<Vec<f64>> {
        let depth = self.depth();
        let mut acts = vec![Vec::new(); depth + 1];
        acts[depth] = top.to_vec();
        for k in (0..depth).rev() {
            let mut g = self.weights[k].mul_vec(&acts[k + 1]);
            let squash = k > 0 || output == OutputActivation::Sigmoid;
            for (x, d) in g.iter_mut().zip(&self.dec_bias[k]) {
                *x += d;
                if squash {
                    *x = sigmoid(*x);
                }
            }
            acts[k] = g;
        }
        acts
    }
}

/// Top-layer code `f^(L) ∘ … ∘ f^(1)(v)`.
pub fn dae_encode(v: &[f64], params: &DaeParams) -> Result<Vec<f64>> {
    check_len("visible vector", params.n_visible(), v.len())?;
    Ok(params.encode_all(v).pop().expect("at least one layer"))
}

/// Reconstruction from a top-layer code; hidden decoder layers squash, the visible layer is affine.
pub fn dae_decode(mu_top: &[f64], params: &DaeParams) -> Result<Vec<f64>> {
    let top = params.weights.last().expect("at least one layer").cols();
    check_len("top code", top, mu_top.len())?;
    Ok(params
        .decode_all(mu_top, OutputActivation::Linear)
        .swap_remove(0))
}

pub fn dae_denoise_patch(noisy: &[f64], params: &DaeParams) -> Result<Vec<f64>> {
    let code = dae_encode(noisy, params)?;
    dae_decode(&code, params)
}
