//! Toy conditional masked language model with a recurrent local head.
//!
//! A post-norm transformer encoder reads `⟨length⟩ + source`; a bidirectional
//! decoder turns the (partially masked) target into one hidden vector per
//! position. The local head is an LSTM cell started from that vector
//! (`h₀ = pos_i`, `c₀ = 0`) and fed `⟨sop⟩`, which emits `K` tokens left to
//! right. The state of the `⟨length⟩` slot predicts the target length.
//!
//! Everything is `f64` with hand-written backward passes; the gradient is
//! checked against finite differences in the test suite.

mod checkpoint;
mod data;
pub(crate) mod layout;
pub(crate) mod linalg;
mod net;
mod train;

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

pub use checkpoint::{load_checkpoint, save_checkpoint, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use data::{deletion_augment, gold_pieces, mask_sample, TrainExample};
pub use layout::{parameter_count, Group, Init, Layout, Slot};
pub use net::{Encoded, Hidden, LossBreakdown};
pub use train::{clip_grad_norm, evaluate_loss, train, training_loss, Adam, TrainConfig, TrainReport};

use crate::vocab::RESERVED;
use crate::{Error, Result};

/// Architecture hyper-parameters.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ModelConfig {
    pub d_model: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    /// Local translation steps.
    pub k: usize,
    /// Bound on source length (with the length token) and target length.
    pub max_len: usize,
    pub vocab_size: usize,
    pub seed: u64,
}

impl ModelConfig {
    pub fn new(vocab_size: usize) -> Self {
        ModelConfig {
            d_model: 32,
            heads: 2,
            ffn_dim: 64,
            enc_layers: 1,
            dec_layers: 1,
            k: 3,
            max_len: 64,
            vocab_size,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |why: &str| Err(Error::InvalidConfig(why.into()));
        if self.heads == 0 || self.d_model == 0 || !self.d_model.is_multiple_of(self.heads) {
            return bad("d_model must be a positive multiple of heads");
        }
        if self.k == 0 {
            return bad("K must be at least 1");
        }
        if self.max_len < 2 {
            return bad("max_len must be at least 2");
        }
        if self.ffn_dim == 0 {
            return bad("ffn_dim must be positive");
        }
        if self.vocab_size <= RESERVED as usize {
            return Err(Error::InvalidConfig(format!(
                "vocab_size {} leaves no room beyond the {RESERVED} reserved ids",
                self.vocab_size
            )));
        }
        Ok(())
    }
}

/// Model parameters: one flat buffer addressed through a [`Layout`].
#[derive(Clone, Debug)]
pub struct Model {
    config: ModelConfig,
    layout: Layout,
    params: Vec<f64>,
}

impl PartialEq for Model {
    fn eq(&self, other: &Self) -> bool {
        self.config == other.config
            && self.params.len() == other.params.len()
            && self.params.iter().zip(&other.params).all(|(a, b)| a.to_bits() == b.to_bits())
    }
}

impl Model {
    /// Random initialisation seeded from `config.seed`.
    pub fn new(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let mut params = vec![0.0; layout.total()];
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let d = config.d_model;
        for g in layout.groups() {
            let buf = g.slot.of_mut(&mut params);
            match g.init {
                Init::Fan | Init::Embedding => {
                    let fan = if g.init == Init::Fan { g.slot.rows } else { g.slot.cols };
                    let normal = Normal::new(0.0, 1.0 / libm::sqrt(fan as f64)).expect("positive std");
                    for v in buf.iter_mut() {
                        *v = normal.sample(&mut rng);
                    }
                }
                Init::Zeros => buf.fill(0.0),
                Init::Ones => buf.fill(1.0),
                Init::ForgetBias => {
                    buf.fill(0.0);
                    buf[d..2 * d].fill(1.0);
                }
            }
        }
        Ok(Model { config, layout, params })
    }

    /// All parameters zero.
    pub fn zeros(config: ModelConfig) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        let params = vec![0.0; layout.total()];
        Ok(Model { config, layout, params })
    }

    /// Wraps an existing buffer, checking its size against the layout.
    pub fn from_params(config: ModelConfig, params: Vec<f64>) -> Result<Self> {
        config.validate()?;
        let layout = Layout::new(&config);
        if params.len() != layout.total() {
            return Err(Error::MalformedCheckpoint(format!(
                "expected {} parameters, found {}",
                layout.total(),
                params.len()
            )));
        }
        Ok(Model { config, layout, params })
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    pub fn num_params(&self) -> usize {
        self.params.len()
    }

    pub fn all_finite(&self) -> bool {
        self.params.iter().all(|v| v.is_finite())
    }
}
