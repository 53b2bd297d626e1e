//! Merging overlapping pieces into one sequence.
//!
//! [`merge_two`] aligns two token runs with an LCS, keeps aligned tokens once
//! (with the better score) and settles every unaligned stretch by comparing
//! the mean score of the competing spans. [`merge_all`] applies it left to
//! right over all pieces, touching only the last `K` tokens of the running
//! output and the first `K` tokens of the next piece.

use alloc::vec::Vec;

use crate::align::lcs;
use crate::vocab::{MergedSequence, Piece, ScoredToken, TokenId, EOS, PAD};
use crate::{Error, Result};

/// `ln 0.25`, the score of an empty span.
pub const EMPTY_SPAN_SCORE: f64 = -1.386_294_361_119_890_6;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MergeConfig {
    /// Local translation steps, also the merge window size.
    pub k: usize,
    pub empty_span_score: f64,
}

impl Default for MergeConfig {
    fn default() -> Self {
        MergeConfig { k: 3, empty_span_score: EMPTY_SPAN_SCORE }
    }
}

impl MergeConfig {
    pub fn with_k(k: usize) -> Self {
        MergeConfig { k, ..Default::default() }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::InvalidConfig("K must be at least 1".into()));
        }
        if !self.empty_span_score.is_finite() || self.empty_span_score >= 0.0 {
            return Err(Error::InvalidConfig("empty span score must be finite and negative".into()));
        }
        Ok(())
    }
}

/// Mean token score of a span, or the configured constant for an empty span.
pub fn span_score(span: &[ScoredToken], cfg: &MergeConfig) -> f64 {
    if span.is_empty() {
        return cfg.empty_span_score;
    }
    span.iter().map(|t| t.score).sum::<f64>() / span.len() as f64
}

/// Collapses two aligned copies of the same token: best score, pooled position.
pub fn align_token(t1: &ScoredToken, t2: &ScoredToken) -> Result<ScoredToken> {
    if t1.token != t2.token {
        return Err(Error::AlignMismatch);
    }
    Ok(ScoredToken { token: t1.token, score: t1.score.max(t2.score), position: t1.position.merge(t2.position) })
}

/// Merges two token runs.
///
/// With no common token the result is `s1` followed by `s2`. Otherwise the
/// matched pairs, followed by a sentinel at `(|s1|, |s2|)`, cut both runs into
/// alternating unmatched spans and matches; each pair of competing spans keeps
/// the side with the higher [`span_score`] (ties keep `s1`).
pub fn merge_two(s1: &[ScoredToken], s2: &[ScoredToken], cfg: &MergeConfig) -> Vec<ScoredToken> {
    let ids1: Vec<TokenId> = s1.iter().map(|t| t.token).collect();
    let ids2: Vec<TokenId> = s2.iter().map(|t| t.token).collect();
    let pairs = lcs(&ids1, &ids2);
    if pairs.is_empty() {
        let mut out = Vec::with_capacity(s1.len() + s2.len());
        out.extend_from_slice(s1);
        out.extend_from_slice(s2);
        return out;
    }

    let mut out = Vec::with_capacity(s1.len() + s2.len());
    let (mut from1, mut from2) = (0usize, 0usize);
    let sentinel = (s1.len(), s2.len());
    for (i1, i2) in pairs.into_iter().chain(core::iter::once(sentinel)) {
        let span1 = &s1[from1..i1];
        let span2 = &s2[from2..i2];
        if span_score(span1, cfg) >= span_score(span2, cfg) {
            out.extend_from_slice(span1);
        } else {
            out.extend_from_slice(span2);
        }
        if (i1, i2) != sentinel {
            // lcs only pairs equal ids
            out.push(ScoredToken {
                token: s1[i1].token,
                score: s1[i1].score.max(s2[i2].score),
                position: s1[i1].position.merge(s2[i2].position),
            });
        }
        from1 = i1 + 1;
        from2 = i2 + 1;
    }
    out
}

/// Drops everything from the first `PAD` or `EOS` on.
pub fn strip_terminators(tokens: &[ScoredToken]) -> &[ScoredToken] {
    let end = tokens.iter().position(|t| t.token == PAD || t.token == EOS).unwrap_or(tokens.len());
    &tokens[..end]
}

/// Left-to-right scan merging every piece into the running output.
///
/// Pieces are taken in the given order (sorted by anchor). Terminators are
/// stripped first and pieces left empty are skipped. Each step merges the
/// last `K` output tokens with the first `K` tokens of the piece; everything
/// else is copied through.
pub fn merge_all(pieces: &[Piece], cfg: &MergeConfig) -> Result<MergedSequence> {
    if pieces.is_empty() {
        return Err(Error::NoPieces);
    }
    debug_assert!(pieces.windows(2).all(|w| w[0].anchor <= w[1].anchor));
    let k = cfg.k.max(1);
    let mut out: Vec<ScoredToken> = Vec::new();
    for piece in pieces {
        let toks = strip_terminators(&piece.tokens);
        if toks.is_empty() {
            continue;
        }
        if out.is_empty() {
            out.extend_from_slice(toks);
            continue;
        }
        let tail_start = out.len().saturating_sub(k);
        let head_end = toks.len().min(k);
        let merged = merge_two(&out[tail_start..], &toks[..head_end], cfg);
        out.truncate(tail_start);
        out.extend(merged);
        out.extend_from_slice(&toks[head_end..]);
    }
    Ok(MergedSequence { tokens: out })
}
