//! Loss over a batch and the training loop.

use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::data::TrainExample;
use super::net::LossBreakdown;
use super::Model;
use crate::vocab::TokenId;
use crate::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct TrainConfig {
    /// Weight of gold tokens whose position was not masked.
    pub alpha: f64,
    /// Deletions per example are drawn from `1..=max(1, floor(delete_frac·N))`.
    pub delete_frac: f64,
    /// Probability that an example gets any deletions at all.
    pub delete_prob: f64,
    pub lr: f64,
    /// Decay the learning rate linearly to zero over `steps`.
    pub lr_decay: bool,
    pub batch_size: usize,
    pub steps: usize,
    /// Global gradient-norm clip; `0` disables clipping.
    pub grad_clip: f64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            alpha: 0.1,
            delete_frac: 0.15,
            delete_prob: 0.5,
            lr: 1e-3,
            lr_decay: false,
            batch_size: 32,
            steps: 1000,
            grad_clip: 1.0,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidConfig(why.into()));
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad("alpha must be in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.delete_frac) {
            return bad("delete_frac must be in [0, 1)");
        }
        if !(0.0..=1.0).contains(&self.delete_prob) {
            return bad("delete_prob must be in [0, 1]");
        }
        if self.batch_size == 0 {
            return bad("batch_size must be positive");
        }
        if !(self.lr > 0.0) {
            return bad("lr must be positive");
        }
        Ok(())
    }
}

/// Mean loss over `batch` and its gradient with respect to every parameter.
///
/// Examples are reduced in order, so the result is reproducible bit for bit.
pub fn training_loss(model: &Model, batch: &[TrainExample], alpha: f64) -> Result<(LossBreakdown, Vec<f64>)> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grads = vec![0.0; model.num_params()];
    let mut total = LossBreakdown::default();
    for ex in batch {
        let part = model.example_loss(ex, alpha, scale, Some(&mut grads))?;
        total.accumulate(&part);
    }
    if !grads.iter().all(|g| g.is_finite()) {
        return Err(Error::NumericalDivergence);
    }
    Ok((total, grads))
}

/// Loss only, no gradient.
pub fn evaluate_loss(model: &Model, batch: &[TrainExample], alpha: f64) -> Result<LossBreakdown> {
    if batch.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let scale = 1.0 / batch.len() as f64;
    let mut total = LossBreakdown::default();
    for ex in batch {
        total.accumulate(&model.example_loss(ex, alpha, scale, None)?);
    }
    Ok(total)
}

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    m: Vec<f64>,
    v: Vec<f64>,
    t: u32,
}

impl Adam {
    pub fn new(n: usize, lr: f64) -> Self {
        Adam { lr, beta1: 0.9, beta2: 0.999, eps: 1e-8, m: vec![0.0; n], v: vec![0.0; n], t: 0 }
    }

    pub fn step(&mut self, params: &mut [f64], grads: &[f64]) {
        self.t += 1;
        let c1 = 1.0 - libm::pow(self.beta1, self.t as f64);
        let c2 = 1.0 - libm::pow(self.beta2, self.t as f64);
        for ((p, &g), (m, v)) in params.iter_mut().zip(grads).zip(self.m.iter_mut().zip(self.v.iter_mut())) {
            *m = self.beta1 * *m + (1.0 - self.beta1) * g;
            *v = self.beta2 * *v + (1.0 - self.beta2) * g * g;
            *p -= self.lr * (*m / c1) / (libm::sqrt(*v / c2) + self.eps);
        }
    }
}

/// Scales `grads` so their global L2 norm is at most `max_norm`; returns the norm before clipping.
pub fn clip_grad_norm(grads: &mut [f64], max_norm: f64) -> f64 {
    let norm = libm::sqrt(grads.iter().map(|g| g * g).sum::<f64>());
    if max_norm > 0.0 && norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
    norm
}

/// Result of [`train`].
#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: Model,
    /// Mean batch loss at every step, before the update.
    pub losses: Vec<f64>,
}

/// Seeded, single-threaded training on `(source, target)` pairs.
///
/// `on_step` sees every step's loss before the parameter update; the caller
/// decides how often to log.
pub fn train(
    mut model: Model,
    pairs: &[(Vec<TokenId>, Vec<TokenId>)],
    cfg: &TrainConfig,
    mut on_step: impl FnMut(usize, &LossBreakdown),
) -> Result<TrainReport> {
    cfg.validate()?;
    if pairs.is_empty() {
        return Err(Error::EmptyBatch);
    }
    let k = model.config().k;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut adam = Adam::new(model.num_params(), cfg.lr);
    let mut losses = Vec::with_capacity(cfg.steps);
    let mut batch = Vec::with_capacity(cfg.batch_size);
    for step in 0..cfg.steps {
        batch.clear();
        for _ in 0..cfg.batch_size {
            let (src, tgt) = &pairs[rng.gen_range(0..pairs.len())];
            if tgt.is_empty() {
                continue;
            }
            batch.push(TrainExample::sample(&mut rng, src, tgt, k, cfg.delete_frac, cfg.delete_prob));
        }
        if batch.is_empty() {
            continue;
        }
        let (loss, mut grads) = training_loss(&model, &batch, cfg.alpha)?;
        on_step(step, &loss);
        losses.push(loss.total);
        clip_grad_norm(&mut grads, cfg.grad_clip);
        if cfg.lr_decay {
            adam.lr = cfg.lr * (1.0 - step as f64 / cfg.steps as f64);
        }
        adam.step(model.params_mut(), &grads);
        if !model.all_finite() {
            return Err(Error::NumericalDivergence);
        }
    }
    Ok(TrainReport { model, losses })
}
