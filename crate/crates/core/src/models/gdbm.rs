//! Gaussian-Bernoulli deep Boltzmann machine: energy, mean-field inference
//! and patch reconstruction.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::Rng;

use crate::error::{check_len, Error, Result};
use crate::math::{dot, ln, sigmoid, Matrix};
use crate::models::grbm::GrbmParams;

/// Default number of mean-field sweeps used for denoising.
pub const DEFAULT_MEAN_FIELD_ITERS: usize = 5;
/// Early-exit threshold on the largest change of any `μ` within a sweep.
pub const MEAN_FIELD_TOL: f64 = 1e-6;

/// Parameters of a GDBM with `L >= 2` hidden layers.
#[derive(Debug, Clone, PartialEq)]
pub struct GdbmParams {
    /// Visible-to-first-hidden weights, `[n_visible × N_1]`.
    pub weights: Matrix,
    /// `U^(l)` between hidden layers `l` and `l + 1`, shape `[N_l × N_{l+1}]`; `L - 1` entries.
    pub inter: Vec<Matrix>,
    pub visible_bias: Vec<f64>,
    /// One bias vector per hidden layer.
    pub hidden_bias: Vec<Vec<f64>>,
    pub sigma2: f64,
}

impl GdbmParams {
    pub fn new(
        weights: Matrix,
        inter: Vec<Matrix>,
        visible_bias: Vec<f64>,
        hidden_bias: Vec<Vec<f64>>,
        sigma2: f64,
    ) -> Result<Self> {
        let p = Self {
            weights,
            inter,
            visible_bias,
            hidden_bias,
            sigma2,
        };
        p.validate()?;
        Ok(p)
    }

    /// Zero weights and biases, unit variance.
    pub fn zeros(n_visible: usize, layer_sizes: &[usize]) -> Self {
        assert!(!layer_sizes.is_empty(), "at least one hidden layer");
        Self {
            weights: Matrix::zeros(n_visible, layer_sizes[0]),
            inter: layer_sizes
                .windows(2)
                .map(|w| Matrix::zeros(w[0], w[1]))
                .collect(),
            visible_bias: vec![0.0; n_visible],
            hidden_bias: layer_sizes.iter().map(|&n| vec![0.0; n]).collect(),
            sigma2: 1.0,
        }
    }

    /// Weights from `N(0, weight_std^2)`, zero biases, unit variance.
    pub fn random<R: Rng + ?Sized>(
        n_visible: usize,
        layer_sizes: &[usize],
        weight_std: f64,
        rng: &mut R,
    ) -> Self {
        let mut p = Self::zeros(n_visible, layer_sizes);
        p.weights = Matrix::random_normal(n_visible, layer_sizes[0], weight_std, rng);
        for (u, w) in p.inter.iter_mut().zip(layer_sizes.windows(2)) {
            *u = Matrix::random_normal(w[0], w[1], weight_std, rng);
        }
        p
    }

    /// A GRBM stacked under a disconnected hidden layer of `extra` units.
    pub fn lift_grbm(grbm: &GrbmParams, extra: usize) -> Self {
        let n_h = grbm.n_hidden();
        let mut p = Self::zeros(grbm.n_visible(), &[n_h, extra]);
        p.weights = grbm.weights.clone();
        p.visible_bias = grbm.visible_bias.clone();
        p.hidden_bias[0] = grbm.hidden_bias.clone();
        p.sigma2 = grbm.sigma2;
        p
    }

    #[inline]
    pub fn n_visible(&self) -> usize {
        self.weights.rows()
    }

    #[inline]
    pub fn depth(&self) -> usize {
        self.hidden_bias.len()
    }

    pub fn layer_sizes(&self) -> Vec<usize> {
        self.hidden_bias.iter().map(Vec::len).collect()
    }

    pub fn total_hidden(&self) -> usize {
        self.hidden_bias.iter().map(Vec::len).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let sizes = self.layer_sizes();
        if sizes.len() < 2 {
            return Err(Error::InvalidParams(format!(
                "a GDBM needs at least two hidden layers, got {}",
                sizes.len()
            )));
        }
        check_len("visible bias", self.n_visible(), self.visible_bias.len())?;
        check_len("first hidden layer", sizes[0], self.weights.cols())?;
        check_len("inter-layer weight count", sizes.len() - 1, self.inter.len())?;
        for (u, w) in self.inter.iter().zip(sizes.windows(2)) {
            check_len("inter-layer rows", w[0], u.rows())?;
            check_len("inter-layer cols", w[1], u.cols())?;
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::InvalidParams(format!(
                "sigma2 must be positive and finite, got {}",
                self.sigma2
            )));
        }
        let finite = self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()));
        if !finite {
            return Err(Error::InvalidParams("non-finite GDBM parameter".into()));
        }
        Ok(())
    }

    /// Flat views in persistence order: W, U^(1..L-1), b, c^(1..L).
    pub fn tensors(&self) -> Vec<&[f64]> {
        let mut t: Vec<&[f64]> = vec![self.weights.as_slice()];
        t.extend(self.inter.iter().map(Matrix::as_slice));
        t.push(&self.visible_bias);
        t.extend(self.hidden_bias.iter().map(Vec::as_slice));
        t
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let mut t: Vec<&mut [f64]> = vec![self.weights.as_mut_slice()];
        t.extend(self.inter.iter_mut().map(Matrix::as_mut_slice));
        t.push(&mut self.visible_bias);
        t.extend(self.hidden_bias.iter_mut().map(Vec::as_mut_slice));
        t
    }

    /// Input to hidden layer `l` from the layer below (`v / σ²` for `l = 0`).
    pub(crate) fn input_from_below(&self, l: usize, v: &[f64], mu: &[Vec<f64>], out: &mut [f64]) {
        if l == 0 {
            self.weights.t_mul_vec_into(v, out);
            let s = 1.0 / self.sigma2;
            out.iter_mut().for_each(|x| *x *= s);
        } else {
            self.inter[l - 1].t_mul_vec_into(&mu[l - 1], out);
        }
    }

    /// Input to hidden layer `l` from the layer above (zero at the top).
    pub(crate) fn add_input_from_above(&self, l: usize, mu: &[Vec<f64>], out: &mut [f64]) {
        if l + 1 < self.depth() {
            let u = &self.inter[l];
            for (j, o) in out.iter_mut().enumerate() {
                *o += dot(u.row(j), &mu[l + 1]);
            }
        }
    }
}

/// Energy `E(v, h | Θ)`.
///
/// `h` may hold any reals; for binary states this is the energy proper and
/// for probabilities it is the expected energy under a factorized `Q(h)`.
pub fn gdbm_energy(v: &[f64], h: &[Vec<f64>], params: &GdbmParams) -> Result<f64> {
    check_len("visible vector", params.n_visible(), v.len())?;
    check_len("hidden layer count", params.depth(), h.len())?;
    for (hl, cl) in h.iter().zip(&params.hidden_bias) {
        check_len("hidden layer", cl.len(), hl.len())?;
    }
    Ok(-neg_energy(v, h, params))
}

fn neg_energy(v: &[f64], h: &[Vec<f64>], p: &GdbmParams) -> f64 {
    let s2 = p.sigma2;
    let quad: f64 = v
        .iter()
        .zip(&p.visible_bias)
        .map(|(vi, bi)| -(vi - bi) * (vi - bi) / (2.0 * s2))
        .sum();
    let wh = p.weights.t_mul_vec(v);
    let coupling = dot(&wh, &h[0]) / s2;
    let biases: f64 = h.iter().zip(&p.hidden_bias).map(|(hl, cl)| dot(hl, cl)).sum();
    let inter: f64 = p
        .inter
        .iter()
        .enumerate()
        .map(|(l, u)| dot(&u.t_mul_vec(&h[l]), &h[l + 1]))
        .sum();
    quad + coupling + biases + inter
}

/// Variational parameters `μ^(l)` of a fully factorized posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct MeanFieldState {
    pub mu: Vec<Vec<f64>>,
    /// Number of fixed-point sweeps that were applied after initialization.
    pub sweeps: usize,
    /// Largest `|Δμ|` observed in the last sweep.
    pub last_change: f64,
}

/// Upward initialization with doubled weights into every layer except the top.
pub fn mean_field_init(v: &[f64], params: &GdbmParams) -> Result<MeanFieldState> {
    check_len("visible vector", params.n_visible(), v.len())?;
    let depth = params.depth();
    let mut mu: Vec<Vec<f64>> = params.hidden_bias.iter().map(|c| vec![0.0; c.len()]).collect();
    for l in 0..depth {
        let mut input = vec![0.0; mu[l].len()];
        params.input_from_below(l, v, &mu, &mut input);
        let factor = if l + 1 < depth { 2.0 } else { 1.0 };
        for ((m, x), c) in mu[l].iter_mut().zip(&input).zip(&params.hidden_bias[l]) {
            *m = sigmoid(factor * x + c);
        }
    }
    Ok(MeanFieldState {
        mu,
        sweeps: 0,
        last_change: f64::INFINITY,
    })
}

/// One bottom-to-top sweep of the fixed-point rule; returns the largest change.
pub fn mean_field_sweep(v: &[f64], params: &GdbmParams, state: &mut MeanFieldState) -> Result<f64> {
    check_len("visible vector", params.n_visible(), v.len())?;
    check_len("mean-field layer count", params.depth(), state.mu.len())?;
    let mut change = 0.0f64;
    for l in 0..params.depth() {
        let n = params.hidden_bias[l].len();
        check_len("mean-field layer", n, state.mu[l].len())?;
        let mut input = vec![0.0; n];
        params.input_from_below(l, v, &state.mu, &mut input);
        params.add_input_from_above(l, &state.mu, &mut input);
        for ((m, x), c) in state.mu[l].iter_mut().zip(&input).zip(&params.hidden_bias[l]) {
            let next = sigmoid(x + c);
            change = change.max((next - *m).abs());
            *m = next;
        }
    }
    state.sweeps += 1;
    state.last_change = change;
    Ok(change)
}

/// Mean-field posterior with `v` clamped: doubled-weight initialization,
/// then up to `max_iters` sweeps, stopping early once no `μ` moves by more
/// than [`MEAN_FIELD_TOL`].
pub fn gdbm_mean_field(v_clamped: &[f64], params: &GdbmParams, max_iters: usize) -> Result<MeanFieldState> {
    if max_iters == 0 {
        return Err(Error::Contract("mean-field needs at least one sweep".into()));
    }
    let mut state = mean_field_init(v_clamped, params)?;
    for _ in 0..max_iters {
        if mean_field_sweep(v_clamped, params, &mut state)? < MEAN_FIELD_TOL {
            break;
        }
    }
    Ok(state)
}

/// Denoised patch `W μ^(1) + b` after [`DEFAULT_MEAN_FIELD_ITERS`] sweeps.
pub fn gdbm_denoise_patch(noisy: &[f64], params: &GdbmParams) -> Result<Vec<f64>> {
    gdbm_denoise_patch_with(noisy, params, DEFAULT_MEAN_FIELD_ITERS)
}

pub fn gdbm_denoise_patch_with(noisy: &[f64], params: &GdbmParams, max_iters: usize) -> Result<Vec<f64>> {
    let state = gdbm_mean_field(noisy, params, max_iters)?;
    let mut out = params.weights.mul_vec(&state.mu[0]);
    for (o, b) in out.iter_mut().zip(&params.visible_bias) {
        *o += b;
    }
    Ok(out)
}

/// Variational free energy `E_Q[E(v, h)] - H(Q)` at the mean-field solution.
pub fn gdbm_free_energy(v: &[f64], params: &GdbmParams, max_iters: usize) -> Result<f64> {
    let state = gdbm_mean_field(v, params, max_iters)?;
    let expected = gdbm_energy(v, &state.mu, params)?;
    let entropy: f64 = state
        .mu
        .iter()
        .flatten()
        .map(|&m| {
            let mut h = 0.0;
            if m > 0.0 {
                h -= m * ln(m);
            }
            if m < 1.0 {
                h -= (1.0 - m) * ln(1.0 - m);
            }
            h
        })
        .sum();
    Ok(expected - entropy)
}
