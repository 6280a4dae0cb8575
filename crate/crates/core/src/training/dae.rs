use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use super::{
    corrupt_with, epoch_batches, gather_rows, lr_schedule, require_data, EpochRecord, Phase,
    TrainConfig, STREAM_CORRUPT, STREAM_INIT,
};
use crate::error::{check_len, Error, Result};
use crate::math::{sigmoid, Matrix};
use crate::models::dae::{DaeParams, OutputActivation};
use crate::rng::{mix, stream_rng};

/// Corrupts `clean` with `η(·)` and returns the regularized reconstruction
/// loss (summed over the batch) and its gradient.
pub fn dae_loss_and_grad<R: Rng + ?Sized>(
    clean: &Matrix,
    params: &DaeParams,
    cfg: &TrainConfig,
    rng: &mut R,
) -> Result<(f64, DaeParams)> {
    let corrupted = corrupt_with(clean, cfg.corrupt_gauss_std, cfg.corrupt_mask_frac, rng);
    dae_loss_and_grad_on(clean, &corrupted, params, cfg.sparsity_lambda, cfg.sparsity_rho)
}

/// Loss and gradient for an explicit corrupted input.
///
/// `loss = Σ_n ‖decode(encode(ṽ_n)) - v_n‖² + λ Σ_n Σ_j (ρ - h1_nj)²`
/// where `h1` is the first encoder layer evaluated on `ṽ_n`. The returned
/// gradient has the layout of `params`; encoder and decoder contributions
/// to each tied matrix are summed.
pub fn dae_loss_and_grad_on(
    clean: &Matrix,
    corrupted: &Matrix,
    params: &DaeParams,
    lambda: f64,
    rho: f64,
) -> Result<(f64, DaeParams)> {
    loss_and_grad(clean, corrupted, params, OutputActivation::Linear, lambda, rho)
}

pub(crate) fn loss_and_grad(
    clean: &Matrix,
    corrupted: &Matrix,
    params: &DaeParams,
    output: OutputActivation,
    lambda: f64,
    rho: f64,
) -> Result<(f64, DaeParams)> {
    if clean.rows() == 0 {
        return Err(Error::Data("empty minibatch".into()));
    }
    check_len("batch width", params.n_visible(), clean.cols())?;
    check_len("corrupted batch rows", clean.rows(), corrupted.rows())?;
    check_len("corrupted batch width", clean.cols(), corrupted.cols())?;

    let depth = params.depth();
    let mut grad = DaeParams::zeros(params.n_visible(), &params.layer_sizes());
    let mut loss = 0.0;

    for n in 0..clean.rows() {
        let target = clean.row(n);
        let enc = params.encode_all(corrupted.row(n));
        let dec = params.decode_all(&enc[depth], output);

        // Reconstruction error at the visible output.
        let mut delta: Vec<f64> = dec[0].iter().zip(target).map(|(y, t)| y - t).collect();
        loss += delta.iter().map(|d| d * d).sum::<f64>();
        for (d, y) in delta.iter_mut().zip(&dec[0]) {
            *d *= 2.0;
            if output == OutputActivation::Sigmoid {
                *d *= y * (1.0 - y);
            }
        }

        // Decoder, bottom to top: `delta` is the gradient wrt the pre-activation of dec[k].
        for k in 0..depth {
            crate::math::axpy(&mut grad.dec_bias[k], 1.0, &delta);
            grad.weights[k].add_outer(1.0, &delta, &dec[k + 1]);
            let mut up = params.weights[k].t_mul_vec(&delta);
            if k + 1 < depth {
                for (u, g) in up.iter_mut().zip(&dec[k + 1]) {
                    *u *= g * (1.0 - g);
                }
            }
            delta = up;
        }

        // `delta` is now the gradient wrt the top code enc[depth]; walk the encoder down.
        let mut grad_h = delta;
        for k in (0..depth).rev() {
            let h = &enc[k + 1];
            if k == 0 && lambda != 0.0 {
                for (gh, hj) in grad_h.iter_mut().zip(h) {
                    *gh -= 2.0 * lambda * (rho - hj);
                }
            }
            let pre: Vec<f64> = grad_h.iter().zip(h).map(|(g, hj)| g * hj * (1.0 - hj)).collect();
            crate::math::axpy(&mut grad.enc_bias[k], 1.0, &pre);
            grad.weights[k].add_outer(1.0, &enc[k], &pre);
            if k > 0 {
                grad_h = params.weights[k].mul_vec(&pre);
            }
        }

        if lambda != 0.0 {
            loss += lambda * enc[1].iter().map(|h| (rho - h) * (rho - h)).sum::<f64>();
        }
    }
    Ok((loss, grad))
}

/// Initial DAE parameters for `cfg.seed`: `N(0, std²)` weights, zero biases.
pub fn init_dae(n_visible: usize, layer_sizes: &[usize], cfg: &TrainConfig) -> DaeParams {
    let mut rng = stream_rng(cfg.seed, mix(&[STREAM_INIT, 0xDAE]));
    DaeParams::random(n_visible, layer_sizes, cfg.weight_init_std, &mut rng)
}

struct SgdPlan {
    phase: Phase,
    output: OutputActivation,
    gauss_std: f64,
    lambda: f64,
    lr0: f64,
}

fn run_sgd(
    params: &mut DaeParams,
    data: &Matrix,
    cfg: &TrainConfig,
    plan: &SgdPlan,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<()> {
    let mut corrupt_rng = stream_rng(cfg.seed, mix(&[STREAM_CORRUPT, plan.phase.id()]));
    let mut t: u64 = 0;
    for epoch in 0..cfg.epochs {
        let mut total = 0.0;
        let mut lr = lr_schedule(t, plan.lr0, cfg.lr_halflife);
        for idx in epoch_batches(data.rows(), cfg.minibatch, cfg.seed, plan.phase, epoch) {
            let clean = gather_rows(data, &idx);
            let noisy = corrupt_with(&clean, plan.gauss_std, cfg.corrupt_mask_frac, &mut corrupt_rng);
            let (loss, grad) =
                loss_and_grad(&clean, &noisy, params, plan.output, plan.lambda, cfg.sparsity_rho)?;
            total += loss;
            lr = lr_schedule(t, plan.lr0, cfg.lr_halflife);
            let step = -lr / idx.len() as f64;
            for (p, g) in params.tensors_mut().into_iter().zip(grad.tensors()) {
                crate::math::axpy(p, step, g);
            }
            t += 1;
        }
        if !params.tensors().iter().all(|t| t.iter().all(|x| x.is_finite())) {
            return Err(Error::Data(format!("DAE parameters diverged in {} epoch {epoch}", plan.phase)));
        }
        log(&EpochRecord {
            phase: plan.phase,
            epoch,
            loss: total / data.rows() as f64,
            lr,
        });
    }
    Ok(())
}

/// Trains a DAE with `layer_sizes.len()` hidden layers on `patches` (one row per sample).
///
/// A single layer is trained directly with sparsity and both corruptions
/// at `cfg.lr0`. Deeper stacks are pretrained greedily, each layer as a
/// single-layer DAE on the clean activations of the layer below (Gaussian
/// corruption only on the first), then finetuned end to end at
/// `cfg.finetune_lr0` without the sparsity term.
pub fn train_dae(
    patches: &Matrix,
    layer_sizes: &[usize],
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<DaeParams> {
    cfg.validate()?;
    require_data(patches)?;
    if layer_sizes.is_empty() || layer_sizes.contains(&0) {
        return Err(Error::Contract("DAE layer sizes must be non-empty and positive".into()));
    }
    let n_visible = patches.cols();
    let mut params = init_dae(n_visible, layer_sizes, cfg);
    let depth = layer_sizes.len();

    if depth == 1 {
        let plan = SgdPlan {
            phase: Phase::DaeLayer(0),
            output: OutputActivation::Linear,
            gauss_std: cfg.corrupt_gauss_std,
            lambda: cfg.sparsity_lambda,
            lr0: cfg.lr0,
        };
        run_sgd(&mut params, patches, cfg, &plan, log)?;
        return Ok(params);
    }

    let mut layer_input = patches.clone();
    for k in 0..depth {
        let mut single = DaeParams {
            weights: vec![params.weights[k].clone()],
            enc_bias: vec![params.enc_bias[k].clone()],
            dec_bias: vec![params.dec_bias[k].clone()],
        };
        let plan = SgdPlan {
            phase: Phase::DaeLayer(k),
            output: if k == 0 {
                OutputActivation::Linear
            } else {
                OutputActivation::Sigmoid
            },
            gauss_std: if k == 0 { cfg.corrupt_gauss_std } else { 0.0 },
            lambda: cfg.sparsity_lambda,
            lr0: cfg.lr0,
        };
        run_sgd(&mut single, &layer_input, cfg, &plan, log)?;
        params.weights[k] = single.weights.swap_remove(0);
        params.enc_bias[k] = single.enc_bias.swap_remove(0);
        params.dec_bias[k] = single.dec_bias.swap_remove(0);
        if k + 1 < depth {
            layer_input = encode_layer(&layer_input, &params.weights[k], &params.enc_bias[k]);
        }
    }

    let plan = SgdPlan {
        phase: Phase::DaeFinetune,
        output: OutputActivation::Linear,
        gauss_std: cfg.corrupt_gauss_std,
        lambda: 0.0,
        lr0: cfg.finetune_lr0,
    };
    run_sgd(&mut params, patches, cfg, &plan, log)?;
    Ok(params)
}

fn encode_layer(data: &Matrix, w: &Matrix, bias: &[f64]) -> Matrix {
    let mut out = Matrix::zeros(data.rows(), w.cols());
    for r in 0..data.rows() {
        let row = out.row_mut(r);
        w.t_mul_vec_into(data.row(r), row);
        for (x, b) in row.iter_mut().zip(bias) {
            *x = sigmoid(*x + b);
        }
    }
    out
}
