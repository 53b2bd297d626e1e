//! Mask-predict iterative decoding with local pieces.
//!
//! Iteration 1 feeds `L` masks, where `L` is the predicted length. Every
//! iteration decodes all positions, generates a piece at each and merges them.
//! Between iterations the lowest-confidence tokens are re-masked and the
//! sequence is length-adjusted towards `L`. The final merge is returned as is,
//! minus any special symbols.

use alloc::vec;
use alloc::vec::Vec;

use crate::lenadjust::{adjust_length, AdjustConfig};
use crate::merge::{merge_all, MergeConfig};
use crate::model::Model;
use crate::vocab::{is_reserved, ScoredToken, TokenId, MASK, UNK};
use crate::Result;

#[derive(Clone, Debug, PartialEq)]
pub struct DecodeConfig {
    /// Number of iterations `T`.
    pub iterations: usize,
    /// Added to the predicted length before clamping.
    pub length_offset: i64,
    pub merge: MergeConfig,
    pub adjust: AdjustConfig,
    pub seed: u64,
}

impl DecodeConfig {
    /// Defaults for a model's `K`: four iterations, no length offset.
    pub fn for_k(k: usize) -> Self {
        DecodeConfig {
            iterations: 4,
            length_offset: 0,
            merge: MergeConfig::with_k(k),
            adjust: AdjustConfig::default(),
            seed: 0,
        }
    }

    pub fn with_iterations(mut self, t: usize) -> Self {
        self.iterations = t;
        self
    }
}

/// Hypothesis between iterations.
#[derive(Clone, Debug, PartialEq)]
pub struct DecodeState {
    /// 1-based iteration that produced `tokens`.
    pub iteration: usize,
    /// Scores double as confidences.
    pub tokens: Vec<ScoredToken>,
    pub predicted_len: usize,
}

/// Decoding stages reported to a [`StageTimer`].
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Stage {
    /// Encoder, decoder and local head.
    Model,
    Merge,
    /// Re-masking and length adjustment.
    Adjust,
}

/// Hook for timing the stages of [`iterative_decode_with`]. The core crate has no clock.
pub trait StageTimer {
    fn begin(&mut self, _stage: Stage) {}
    fn end(&mut self, _stage: Stage) {}
}

impl StageTimer for () {}

/// Argmax length class plus `offset`, clamped to `[1, max_len]`.
///
/// `logits[c]` scores length `c + 1`; ties go to the shorter length.
pub fn predict_length(logits: &[f64], offset: i64) -> usize {
    let mut best = 0;
    for (c, &l) in logits.iter().enumerate() {
        if l > logits[best] {
            best = c;
        }
    }
    let len = best as i64 + 1 + offset;
    len.clamp(1, logits.len().max(1) as i64) as usize
}

/// Replaces the `n` lowest-scoring tokens with `MASK`; equal scores mask the leftmost first.
pub fn mask_lowest(seq: &[ScoredToken], n: usize) -> Vec<ScoredToken> {
    let mut order: Vec<usize> = (0..seq.len()).collect();
    order.sort_by(|&a, &b| seq[a].score.total_cmp(&seq[b].score).then(a.cmp(&b)));
    let mut out = seq.to_vec();
    for &i in order.iter().take(n) {
        out[i].token = MASK;
    }
    out
}

/// Number of tokens to re-mask after iteration `t` of `total`: `floor(len·(T−t)/T)`.
pub fn remask_count(len: usize, t: usize, total: usize) -> usize {
    len * total.saturating_sub(t) / total.max(1)
}

/// Decodes `source` and returns the output token ids.
pub fn iterative_decode(model: &Model, source: &[TokenId], cfg: &DecodeConfig) -> Result<Vec<TokenId>> {
    iterative_decode_with(model, source, cfg, &mut (), |_| {})
}

/// [`iterative_decode`] with stage timing and a callback after each iteration's merge.
pub fn iterative_decode_with(
    model: &Model,
    source: &[TokenId],
    cfg: &DecodeConfig,
    timer: &mut impl StageTimer,
    mut on_iteration: impl FnMut(&DecodeState),
) -> Result<Vec<TokenId>> {
    let max_len = model.config().max_len;
    let total = cfg.iterations.max(1);

    timer.begin(Stage::Model);
    let enc = model.encode(source)?;
    timer.end(Stage::Model);
    let predicted = predict_length(&enc.length_logits, cfg.length_offset);
    let mut input = vec![MASK; predicted];

    for t in 1..=total {
        timer.begin(Stage::Model);
        let pos = model.decode_positions(&input, &enc)?;
        let pieces = model.generate_pieces(&pos);
        timer.end(Stage::Model);

        timer.begin(Stage::Merge);
        let merged = merge_all(&pieces, &cfg.merge)?;
        timer.end(Stage::Merge);
        on_iteration(&DecodeState { iteration: t, tokens: merged.tokens.clone(), predicted_len: predicted });

        if merged.is_empty() {
            log::warn!("iteration {t}: every piece was empty, emitting an empty translation");
            return Ok(Vec::new());
        }
        if t == total {
            return Ok(merged.tokens.iter().map(|s| s.token).filter(|&id| !is_reserved(id) || id == UNK).collect());
        }

        timer.begin(Stage::Adjust);
        let n = remask_count(merged.len(), t, total);
        let masked = mask_lowest(&merged.tokens, n);
        let adjusted = adjust_length(&masked, predicted, &cfg.adjust);
        input = adjusted.iter().map(|s| s.token).collect();
        input.truncate(max_len);
        timer.end(Stage::Adjust);
    }
    unreachable!("the final iteration returns")
}
