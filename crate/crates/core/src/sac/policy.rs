use std::f64::consts::LN_2;

use ndarray::{Array1, Array2, ArrayView2};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::nn::{Mlp, Scalar};

/// `ln(sqrt(2π))`.
pub const LOG_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn softplus<F: Scalar>(x: F) -> F {
    let zero = F::zero();
    x.max(zero) + (-x.abs()).exp().ln_1p()
}

/// `ln(1 - tanh(u)^2)` without cancellation for large `|u|`.
fn log1m_tanh_sq<F: Scalar>(u: F) -> F {
    let two = F::of(2.0);
    two * (F::of(LN_2) - u - softplus(-two * u))
}

/// `tanh(z)` with `z` drawn i.i.d. standard normal per component: the
/// exploration policy used before learning starts and by the probe.
pub fn random_action(rng: &mut impl Rng, dim: usize) -> Vec<f64> {
    (0..dim)
        .map(|_| rng.sample::<f64, _>(StandardNormal).tanh())
        .collect()
}

/// Reparameterised sample `tanh(mean + exp(log_std) * eps)` and its log density.
///
/// The density is the diagonal Gaussian density of the pre-squash sample
/// minus `Σ ln(1 - tanh(u_i)^2)`.
pub fn squashed_sample(mean: &[f64], log_std: &[f64], eps: &[f64]) -> (Vec<f64>, f64) {
    assert!(mean.len() == log_std.len() && mean.len() == eps.len());
    let mut action = Vec::with_capacity(mean.len());
    let mut log_prob = 0.0;
    for i in 0..mean.len() {
        let u = mean[i] + log_std[i].exp() * eps[i];
        action.push(u.tanh());
        log_prob += -0.5 * eps[i] * eps[i] - log_std[i] - LOG_SQRT_2PI - log1m_tanh_sq(u);
    }
    (action, log_prob)
}

/// Log density of a squashed Gaussian at `action` (each component in (-1, 1)).
pub fn squashed_log_prob(mean: &[f64], log_std: &[f64], action: &[f64]) -> f64 {
    assert!(mean.len() == log_std.len() && mean.len() == action.len());
    let mut log_prob = 0.0;
    for i in 0..mean.len() {
        let u = action[i].atanh();
        let z = (u - mean[i]) / log_std[i].exp();
        log_prob += -0.5 * z * z - log_std[i] - LOG_SQRT_2PI - (1.0 - action[i] * action[i]).ln();
    }
    log_prob
}

/// Batched policy-head output after squashing.
#[derive(Debug, Clone)]
pub struct SquashedBatch<F> {
    pub actions: Array2<F>,
    pub log_probs: Array1<F>,
    pub std: Array2<F>,
    pub eps: Array2<F>,
    /// True where the raw log-std was inside the clamp range (gradient passes).
    pub log_std_free: Array2<bool>,
}

/// Split a `(batch, 2 * action_dim)` head into mean and log-std, clamp the
/// log-std to `bounds`, and draw the reparameterised sample for noise `eps`.
pub fn squash_head<F: Scalar>(
    head: &Array2<F>,
    eps: &Array2<F>,
    bounds: (f64, f64),
) -> SquashedBatch<F> {
    let (rows, cols) = head.dim();
    let d = cols / 2;
    assert_eq!(eps.dim(), (rows, d), "noise shape");
    let (lo, hi) = (F::of(bounds.0), F::of(bounds.1));
    let half = F::of(0.5);
    let log_sqrt_2pi = F::of(LOG_SQRT_2PI);
    let mut actions = Array2::zeros((rows, d));
    let mut std = Array2::zeros((rows, d));
    let mut free = Array2::from_elem((rows, d), true);
    let mut log_probs = Array1::zeros(rows);
    for r in 0..rows {
        let mut lp = F::zero();
        for j in 0..d {
            let raw = head[[r, d + j]];
            let ls = raw.max(lo).min(hi);
            free[[r, j]] = raw >= lo && raw <= hi;
            let s = ls.exp();
            let e = eps[[r, j]];
            let u = head[[r, j]] + s * e;
            actions[[r, j]] = u.tanh();
            std[[r, j]] = s;
            lp = lp - half * e * e - ls - log_sqrt_2pi - log1m_tanh_sq(u);
        }
        log_probs[r] = lp;
    }
    SquashedBatch {
        actions,
        log_probs,
        std,
        eps: eps.clone(),
        log_std_free: free,
    }
}

/// Mean action `tanh(mean)` of a trained actor; used for evaluation.
#[derive(Debug, Clone)]
pub struct DeterministicActor<F> {
    net: Mlp<F>,
    action_dim: usize,
}

impl<F: Scalar> DeterministicActor<F> {
    pub fn new(net: Mlp<F>) -> Self {
        let action_dim = net.output_dim() / 2;
        Self { net, action_dim }
    }

    pub fn obs_dim(&self) -> usize {
        self.net.input_dim()
    }

    pub fn action_dim(&self) -> usize {
        self.action_dim
    }

    pub fn actions(&self, obs: ArrayView2<f64>) -> Array2<f64> {
        let x = obs.mapv(F::of);
        let head = self.net.forward(x.view());
        Array2::from_shape_fn((obs.nrows(), self.action_dim), |(r, j)| {
            head[[r, j]].to_f64_lossy().tanh()
        })
    }
}
