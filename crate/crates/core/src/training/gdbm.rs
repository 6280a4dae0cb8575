//! Greedy RBM-stack pretraining and joint PCD finetuning of a GDBM.
//!
//! The bottom GRBM sees its hidden layer with doubled bottom-up weights,
//! the top RBM sees its visible layer with doubled top-down weights and any
//! middle RBM doubles both directions. This compensates for each interior
//! DBM layer receiving input from two neighbours.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::rbm::{train_rbm_layer, RbmOwned, Visible};
use super::{
    epoch_batches, gather_rows, lr_schedule, require_data, EpochRecord, Phase, PcdState, TrainConfig,
    STREAM_GIBBS, STREAM_INIT,
};
use crate::error::{check_len, Error, Result};
use crate::math::{axpy, sigmoid, sqrt, Matrix};
use crate::models::gdbm::{gdbm_mean_field, mean_field_init, GdbmParams, DEFAULT_MEAN_FIELD_ITERS};
use crate::rng::{mix, stream_rng, DetRng};

/// Layer-wise pretraining; returns an assembled GDBM with `σ² = 1`.
pub fn pretrain_gdbm(
    patches: &Matrix,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<GdbmParams> {
    cfg.validate()?;
    require_data(patches)?;
    let depth = layer_sizes.len();
    if depth < 2 {
        return Err(Error::Contract("a GDBM needs at least two hidden layers".into()));
    }
    if layer_sizes.contains(&0) {
        return Err(Error::Contract("hidden layers must be non-empty".into()));
    }
    let mut params = GdbmParams::zeros(patches.cols(), layer_sizes);
    let mut data = patches.clone();
    let mut n_in = patches.cols();
    for (k, &n_out) in layer_sizes.iter().enumerate() {
        let (up, down) = match k {
            0 => (2.0, 1.0),
            _ if k + 1 == depth => (1.0, 2.0),
            _ => (2.0, 2.0),
        };
        let visible = if k == 0 {
            Visible::Gaussian {
                sigma2: params.sigma2,
            }
        } else {
            Visible::Bernoulli
        };
        let mut rng = stream_rng(cfg.seed, mix(&[STREAM_INIT, 0xDB, k as u64]));
        let init = RbmOwned {
            weights: Matrix::random_normal(n_in, n_out, cfg.weight_init_std, &mut rng),
            visible_bias: vec![0.0; n_in],
            hidden_bias: vec![0.0; n_out],
        };
        let rbm = train_rbm_layer(&data, init, visible, (up, down), cfg, Phase::RbmLayer(k), log)?;
        if k + 1 < depth {
            let scale = if k == 0 { up / params.sigma2 } else { up };
            data = propagate(&data, &rbm, scale);
        }
        if k == 0 {
            params.weights = rbm.weights;
            params.visible_bias = rbm.visible_bias;
        } else {
            params.inter[k - 1] = rbm.weights;
        }
        params.hidden_bias[k] = rbm.hidden_bias;
        n_in = n_out;
    }
    params.validate()?;
    Ok(params)
}

fn propagate(data: &Matrix, rbm: &RbmOwned, scale: f64) -> Matrix {
    let mut out = Matrix::zeros(data.rows(), rbm.weights.cols());
    for r in 0..data.rows() {
        let row = out.row_mut(r);
        rbm.weights.t_mul_vec_into(data.row(r), row);
        for (x, c) in row.iter_mut().zip(&rbm.hidden_bias) {
            *x = sigmoid(scale * *x + c);
        }
    }
    out
}

/// Persistent chains started at random data rows with hidden states sampled
/// from the doubled-weight upward pass.
pub fn init_gdbm_chains<R: Rng + ?Sized>(
    data: &Matrix,
    params: &GdbmParams,
    n_chains: usize,
    rng: &mut R,
) -> Result<PcdState> {
    require_data(data)?;
    check_len("chain width", params.n_visible(), data.cols())?;
    let mut state = PcdState::from_data(data, n_chains, &params.layer_sizes(), rng);
    for c in 0..n_chains {
        let mf = mean_field_init(state.fantasy_v.row(c), params)?;
        for (l, mu) in mf.mu.iter().enumerate() {
            for (h, &p) in state.fantasy_h[l].row_mut(c).iter_mut().zip(mu) {
                *h = bernoulli(p, rng);
            }
        }
    }
    Ok(state)
}

fn bernoulli<R: Rng + ?Sized>(p: f64, rng: &mut R) -> f64 {
    if rng.random::<f64>() < p {
        1.0
    } else {
        0.0
    }
}

/// Gradient direction in the layout of `GdbmParams` (`sigma2` unused).
fn zero_grad(params: &GdbmParams) -> GdbmParams {
    GdbmParams::zeros(params.n_visible(), &params.layer_sizes())
}

fn accumulate(grad: &mut GdbmParams, v: &[f64], h: &[Vec<f64>], weight: f64, sigma2: f64) {
    grad.weights.add_outer(weight / sigma2, v, &h[0]);
    axpy(&mut grad.visible_bias, weight / sigma2, v);
    for (l, u) in grad.inter.iter_mut().enumerate() {
        u.add_outer(weight, &h[l], &h[l + 1]);
    }
    for (c, hl) in grad.hidden_bias.iter_mut().zip(h) {
        axpy(c, weight, hl);
    }
}

/// Resamples hidden layer `l` of one chain from its conditional.
fn sample_hidden<R: Rng + ?Sized>(params: &GdbmParams, l: usize, v: &[f64], h: &mut [Vec<f64>], rng: &mut R) {
    let mut input = vec![0.0; h[l].len()];
    params.input_from_below(l, v, h, &mut input);
    params.add_input_from_above(l, h, &mut input);
    for ((x, c), out) in input.iter().zip(&params.hidden_bias[l]).zip(h[l].iter_mut()) {
        *out = bernoulli(sigmoid(x + c), rng);
    }
}

/// One PCD step of the whole GDBM: mean-field positive phase on `batch`,
/// then one alternating Gibbs sweep of every chain (odd layers first, then
/// the visibles and even layers). Returns the summed reconstruction error.
fn finetune_step<R: Rng + ?Sized>(
    batch: &Matrix,
    params: &mut GdbmParams,
    state: &mut PcdState,
    lr: f64,
    rng: &mut R,
) -> Result<f64> {
    let depth = params.depth();
    let s2 = params.sigma2;
    let mut grad = zero_grad(params);
    let mut err = 0.0;
    let pos = 1.0 / batch.rows() as f64;
    for r in 0..batch.rows() {
        let v = batch.row(r);
        let mf = gdbm_mean_field(v, params, DEFAULT_MEAN_FIELD_ITERS)?;
        accumulate(&mut grad, v, &mf.mu, pos, s2);
        let recon = params.weights.mul_vec(&mf.mu[0]);
        err += recon
            .iter()
            .zip(&params.visible_bias)
            .zip(v)
            .map(|((x, b), vi)| (x + b - vi) * (x + b - vi))
            .sum::<f64>();
    }

    let neg = -1.0 / state.n_chains as f64;
    let sd = sqrt(s2);
    for c in 0..state.n_chains {
        let mut h: Vec<Vec<f64>> = state.fantasy_h.iter().map(|m| m.row(c).to_vec()).collect();
        let mut v = state.fantasy_v.row(c).to_vec();
        for l in (0..depth).step_by(2) {
            sample_hidden(params, l, &v, &mut h, rng);
        }
        params.weights.mul_vec_into(&h[0], &mut v);
        for (x, b) in v.iter_mut().zip(&params.visible_bias) {
            let z: f64 = StandardNormal.sample(rng);
            *x += b + sd * z;
        }
        for l in (1..depth).step_by(2) {
            sample_hidden(params, l, &v, &mut h, rng);
        }
        accumulate(&mut grad, &v, &h, neg, s2);
        state.fantasy_v.row_mut(c).copy_from_slice(&v);
        for (m, hl) in state.fantasy_h.iter_mut().zip(&h) {
            m.row_mut(c).copy_from_slice(hl);
        }
    }
    state.update_counter += 1;

    params.weights.add_scaled(lr, &grad.weights);
    axpy(&mut params.visible_bias, lr, &grad.visible_bias);
    for (u, g) in params.inter.iter_mut().zip(&grad.inter) {
        u.add_scaled(lr, g);
    }
    for (c, g) in params.hidden_bias.iter_mut().zip(&grad.hidden_bias) {
        axpy(c, lr, g);
    }
    Ok(err)
}

/// Joint PCD training of all layers at `η₀ / (1 + t / halflife)` with
/// `η₀ = cfg.finetune_lr0`. `σ²` stays fixed.
pub fn finetune_gdbm(
    patches: &Matrix,
    mut params: GdbmParams,
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<GdbmParams> {
    cfg.validate()?;
    require_data(patches)?;
    params.validate()?;
    check_len("patch width", params.n_visible(), patches.cols())?;
    let phase = Phase::GdbmFinetune;
    let mut rng: DetRng = stream_rng(cfg.seed, mix(&[STREAM_GIBBS, phase.id()]));
    let mut state = init_gdbm_chains(patches, &params, cfg.chains(), &mut rng)?;
    for epoch in 0..cfg.epochs {
        let mut err = 0.0;
        let mut lr = cfg.finetune_lr0;
        for idx in epoch_batches(patches.rows(), cfg.minibatch, cfg.seed, phase, epoch) {
            lr = lr_schedule(state.update_counter, cfg.finetune_lr0, cfg.lr_halflife);
            err += finetune_step(&gather_rows(patches, &idx), &mut params, &mut state, lr, &mut rng)?;
        }
        if !state.is_finite() || params.tensors().iter().any(|t| t.iter().any(|x| !x.is_finite())) {
            return Err(Error::Data(format!("{phase} diverged at epoch {epoch}: non-finite state")));
        }
        log(&EpochRecord {
            phase,
            epoch,
            loss: err / patches.rows() as f64,
            lr,
        });
    }
    Ok(params)
}
