//! Persistent contrastive divergence for Gaussian-Bernoulli and
//! Bernoulli-Bernoulli RBMs.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;
use rand_distr::{Distribution, StandardNormal};

use super::{
    epoch_batches, gather_rows, require_data, EpochRecord, Phase, TrainConfig, STREAM_GIBBS,
    STREAM_INIT,
};
use crate::error::{check_len, Error, Result};
use crate::math::{floor, sigmoid, sqrt, Matrix};
use crate::models::grbm::GrbmParams;
use crate::rng::{mix, stream_rng, DetRng};

/// Fantasy particles of persistent Markov chains.
#[derive(Debug, Clone, PartialEq)]
pub struct PcdState {
    /// `[n_chains × n_visible]`.
    pub fantasy_v: Matrix,
    /// One `[n_chains × N_l]` matrix per hidden layer.
    pub fantasy_h: Vec<Matrix>,
    pub n_chains: usize,
    pub update_counter: u64,
}

impl PcdState {
    /// Chains started at the given visible states with all hidden units off.
    pub fn from_visible(fantasy_v: Matrix, layer_sizes: &[usize]) -> Self {
        let n = fantasy_v.rows();
        Self {
            fantasy_h: layer_sizes.iter().map(|&k| Matrix::zeros(n, k)).collect(),
            n_chains: n,
            fantasy_v,
            update_counter: 0,
        }
    }

    /// `n_chains` chains initialized at rows of `data` drawn uniformly with replacement.
    pub fn from_data<R: Rng + ?Sized>(data: &Matrix, n_chains: usize, layer_sizes: &[usize], rng: &mut R) -> Self {
        let idx: Vec<usize> = (0..n_chains).map(|_| rng.random_range(0..data.rows())).collect();
        Self::from_visible(gather_rows(data, &idx), layer_sizes)
    }

    pub fn is_finite(&self) -> bool {
        self.fantasy_v.is_finite() && self.fantasy_h.iter().all(Matrix::is_finite)
    }
}

/// Visible-unit family of an RBM layer.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Visible {
    Gaussian { sigma2: f64 },
    Bernoulli,
}

/// Borrowed RBM with optional weight doubling in each direction.
pub(crate) struct RbmRef<'a> {
    pub weights: &'a Matrix,
    pub visible_bias: &'a [f64],
    pub hidden_bias: &'a [f64],
    pub visible: Visible,
    pub up: f64,
    pub down: f64,
}

/// Log-likelihood direction `⟨·⟩_data - ⟨·⟩_model` for W, b and c.
#[derive(Debug, Clone, PartialEq)]
pub struct RbmGradient {
    pub weights: Matrix,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

impl RbmGradient {
    fn zeros(nv: usize, nh: usize) -> Self {
        Self {
            weights: Matrix::zeros(nv, nh),
            visible_bias: vec![0.0; nv],
            hidden_bias: vec![0.0; nh],
        }
    }

    /// Concatenation `[W (row-major), b, c]`.
    pub fn to_vec(&self) -> Vec<f64> {
        let mut out = self.weights.as_slice().to_vec();
        out.extend_from_slice(&self.visible_bias);
        out.extend_from_slice(&self.hidden_bias);
        out
    }
}

impl RbmRef<'_> {
    fn scale(&self) -> f64 {
        match self.visible {
            Visible::Gaussian { sigma2 } => 1.0 / sigma2,
            Visible::Bernoulli => 1.0,
        }
    }

    fn hidden_probs(&self, v: &[f64], out: &mut [f64]) {
        self.weights.t_mul_vec_into(v, out);
        let s = self.up * self.scale();
        for (o, c) in out.iter_mut().zip(self.hidden_bias) {
            *o = sigmoid(*o * s + c);
        }
    }

    /// Mean (Gaussian) or activation probability (Bernoulli) of the visibles.
    fn visible_mean(&self, h: &[f64], out: &mut [f64]) {
        self.weights.mul_vec_into(h, out);
        for (o, b) in out.iter_mut().zip(self.visible_bias) {
            *o = self.down * *o + b;
            if self.visible == Visible::Bernoulli {
                *o = sigmoid(*o);
            }
        }
    }

    fn sample_visible<R: Rng + ?Sized>(&self, h: &[f64], out: &mut [f64], rng: &mut R) {
        self.visible_mean(h, out);
        match self.visible {
            Visible::Gaussian { sigma2 } => {
                let sd = sqrt(sigma2);
                for o in out.iter_mut() {
                    let z: f64 = StandardNormal.sample(rng);
                    *o += sd * z;
                }
            }
            Visible::Bernoulli => {
                for o in out.iter_mut() {
                    *o = if rng.random::<f64>() < *o { 1.0 } else { 0.0 };
                }
            }
        }
    }

    /// PCD direction for one minibatch; advances every chain by one Gibbs
    /// step. Also returns the summed reconstruction error of the batch.
    pub(crate) fn pcd_gradient<R: Rng + ?Sized>(
        &self,
        batch: &Matrix,
        state: &mut PcdState,
        rng: &mut R,
    ) -> Result<(RbmGradient, f64)> {
        let (nv, nh) = (self.weights.rows(), self.weights.cols());
        check_len("batch width", nv, batch.cols())?;
        check_len("fantasy width", nv, state.fantasy_v.cols())?;
        check_len("fantasy hidden width", nh, state.fantasy_h[0].cols())?;
        if batch.rows() == 0 || state.n_chains == 0 {
            return Err(Error::Data("empty minibatch or chain set".into()));
        }
        let s = self.scale();
        let mut grad = RbmGradient::zeros(nv, nh);
        let mut h = vec![0.0; nh];
        let mut recon = vec![0.0; nv];
        let mut recon_err = 0.0;

        let wpos = s / batch.rows() as f64;
        let hpos = 1.0 / batch.rows() as f64;
        for r in 0..batch.rows() {
            let v = batch.row(r);
            self.hidden_probs(v, &mut h);
            grad.weights.add_outer(wpos, v, &h);
            crate::math::axpy(&mut grad.visible_bias, wpos, v);
            crate::math::axpy(&mut grad.hidden_bias, hpos, &h);
            self.visible_mean(&h, &mut recon);
            recon_err += recon.iter().zip(v).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        }

        let wneg = -s / state.n_chains as f64;
        let hneg = -1.0 / state.n_chains as f64;
        let mut v_new = vec![0.0; nv];
        for c in 0..state.n_chains {
            self.hidden_probs(state.fantasy_v.row(c), &mut h);
            for x in h.iter_mut() {
                *x = if rng.random::<f64>() < *x { 1.0 } else { 0.0 };
            }
            state.fantasy_h[0].row_mut(c).copy_from_slice(&h);
            self.sample_visible(&h, &mut v_new, rng);
            state.fantasy_v.row_mut(c).copy_from_slice(&v_new);
            self.hidden_probs(&v_new, &mut h);
            grad.weights.add_outer(wneg, &v_new, &h);
            crate::math::axpy(&mut grad.visible_bias, wneg, &v_new);
            crate::math::axpy(&mut grad.hidden_bias, hneg, &h);
        }
        state.update_counter += 1;
        Ok((grad, recon_err))
    }
}

fn grbm_ref(params: &GrbmParams) -> RbmRef<'_> {
    RbmRef {
        weights: &params.weights,
        visible_bias: &params.visible_bias,
        hidden_bias: &params.hidden_bias,
        visible: Visible::Gaussian {
            sigma2: params.sigma2,
        },
        up: 1.0,
        down: 1.0,
    }
}

/// PCD estimate of the log-likelihood gradient of a GRBM.
///
/// The positive phase uses the exact hidden conditional on `batch`; the
/// negative phase advances each fantasy particle by one Gibbs sweep
/// (`h ~ p(h|v)`, then `v ~ N(W h + b, σ²)`) and averages over chains.
pub fn grbm_pcd_gradient<R: Rng + ?Sized>(
    batch: &Matrix,
    params: &GrbmParams,
    state: &mut PcdState,
    rng: &mut R,
) -> Result<RbmGradient> {
    Ok(grbm_ref(params).pcd_gradient(batch, state, rng)?.0)
}

/// One PCD update with learning rate `lr`; `σ²` is left untouched.
pub fn grbm_pcd_step<R: Rng + ?Sized>(
    batch: &Matrix,
    params: &mut GrbmParams,
    state: &mut PcdState,
    lr: f64,
    rng: &mut R,
) -> Result<()> {
    let grad = grbm_pcd_gradient(batch, params, state, rng)?;
    apply(&mut params.weights, &mut params.visible_bias, &mut params.hidden_bias, &grad, lr);
    Ok(())
}

fn apply(w: &mut Matrix, b: &mut [f64], c: &mut [f64], g: &RbmGradient, lr: f64) {
    if lr == 0.0 {
        return;
    }
    w.add_scaled(lr, &g.weights);
    crate::math::axpy(b, lr, &g.visible_bias);
    crate::math::axpy(c, lr, &g.hidden_bias);
}

/// Learning rate for an update in `epoch`: constant `lr0`, then `lr0 / t`
/// once `anneal_start` of the epochs have passed (`t` counts updates from
/// that point, starting at 1).
pub(crate) fn bm_rate(cfg: &TrainConfig, lr0: f64, epoch: usize, annealed_updates: u64) -> f64 {
    let start = anneal_epoch(cfg);
    if epoch < start {
        lr0
    } else {
        lr0 / annealed_updates.max(1) as f64
    }
}

pub(crate) fn anneal_epoch(cfg: &TrainConfig) -> usize {
    floor(cfg.anneal_start * cfg.epochs as f64) as usize
}

pub(crate) struct RbmOwned {
    pub weights: Matrix,
    pub visible_bias: Vec<f64>,
    pub hidden_bias: Vec<f64>,
}

/// Trains one RBM layer with PCD at `cfg.lr0` plus late annealing.
pub(crate) fn train_rbm_layer(
    data: &Matrix,
    mut layer: RbmOwned,
    visible: Visible,
    (up, down): (f64, f64),
    cfg: &TrainConfig,
    phase: Phase,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<RbmOwned> {
    let mut rng: DetRng = stream_rng(cfg.seed, mix(&[STREAM_GIBBS, phase.id()]));
    let mut state = PcdState::from_data(data, cfg.chains(), &[layer.weights.cols()], &mut rng);
    let start = anneal_epoch(cfg);
    let mut annealed: u64 = 0;
    for epoch in 0..cfg.epochs {
        let mut err = 0.0;
        let mut lr = cfg.lr0;
        for idx in epoch_batches(data.rows(), cfg.minibatch, cfg.seed, phase, epoch) {
            let batch = gather_rows(data, &idx);
            if epoch >= start {
                annealed += 1;
            }
            lr = bm_rate(cfg, cfg.lr0, epoch, annealed);
            let rbm = RbmRef {
                weights: &layer.weights,
                visible_bias: &layer.visible_bias,
                hidden_bias: &layer.hidden_bias,
                visible,
                up,
                down,
            };
            let (grad, e) = rbm.pcd_gradient(&batch, &mut state, &mut rng)?;
            err += e;
            apply(&mut layer.weights, &mut layer.visible_bias, &mut layer.hidden_bias, &grad, lr);
        }
        if !state.is_finite() || !layer.weights.is_finite() {
            return Err(Error::Data(format!("{phase} diverged at epoch {epoch}: non-finite chain state")));
        }
        log(&EpochRecord {
            phase,
            epoch,
            loss: err / data.rows() as f64,
            lr,
        });
    }
    Ok(layer)
}

/// Initial GRBM for `cfg.seed`: `N(0, std²)` weights, zero biases, `σ² = 1`.
pub fn init_grbm(n_visible: usize, n_hidden: usize, cfg: &TrainConfig) -> GrbmParams {
    let mut rng = stream_rng(cfg.seed, mix(&[STREAM_INIT, 0x6B]));
    GrbmParams::random(n_visible, n_hidden, cfg.weight_init_std, &mut rng)
}

/// Trains a GRBM on normalized patches with PCD (one Gibbs step per update).
pub fn train_grbm(
    patches: &Matrix,
    n_hidden: usize,
    cfg: &TrainConfig,
    log: &mut dyn FnMut(&EpochRecord),
) -> Result<GrbmParams> {
    cfg.validate()?;
    require_data(patches)?;
    if n_hidden == 0 {
        return Err(Error::Contract("a GRBM needs at least one hidden unit".into()));
    }
    let init = init_grbm(patches.cols(), n_hidden, cfg);
    let sigma2 = init.sigma2;
    let trained = train_rbm_layer(
        patches,
        RbmOwned {
            weights: init.weights,
            visible_bias: init.visible_bias,
            hidden_bias: init.hidden_bias,
        },
        Visible::Gaussian { sigma2 },
        (1.0, 1.0),
        cfg,
        Phase::Grbm,
        log,
    )?;
    GrbmParams::new(trained.weights, trained.visible_bias, trained.hidden_bias, sigma2)
}
