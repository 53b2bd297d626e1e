//! Length adjustment between decoding iterations.
//!
//! The merger decides its own output length. Before the next iteration the
//! (already re-masked) sequence is pulled back towards the predicted length by
//! inserting or deleting `MASK` tokens. Where they go is decided by the
//! position gaps between neighbouring unmasked tokens: inserts go to the widest
//! gap and deletes come from the narrowest.

use alloc::collections::BinaryHeap;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Reverse;

use crate::ratio::Ratio;
use crate::vocab::{Position, ScoredToken, MASK};
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct AdjustConfig {
    /// Relative length difference tolerated without any change.
    pub rel_tolerance: f64,
}

impl Default for AdjustConfig {
    fn default() -> Self {
        AdjustConfig { rel_tolerance: 0.05 }
    }
}

impl AdjustConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.rel_tolerance) {
            return Err(Error::InvalidConfig("rel_tolerance must be in [0, 1)".into()));
        }
        Ok(())
    }
}

/// Position difference between two consecutive unmasked tokens.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GapEntry {
    pub gap: Ratio,
    /// Sequence index of the left unmasked token.
    pub left_index: usize,
    pub right_index: usize,
}

impl GapEntry {
    /// Number of `MASK` tokens inside the gap.
    pub fn masks(&self) -> usize {
        self.right_index - self.left_index - 1
    }
}

/// One entry per adjacent pair of unmasked tokens, left to right.
pub fn compute_gaps(seq: &[ScoredToken]) -> Vec<GapEntry> {
    let unmasked: Vec<usize> = seq.iter().enumerate().filter(|(_, t)| t.token != MASK).map(|(i, _)| i).collect();
    unmasked
        .windows(2)
        .map(|w| GapEntry {
            gap: seq[w[1]].position.value() - seq[w[0]].position.value(),
            left_index: w[0],
            right_index: w[1],
        })
        .collect()
}

/// True when `len` is already close enough to `target`.
pub fn within_tolerance(len: usize, target: usize, cfg: &AdjustConfig) -> bool {
    let diff = len.abs_diff(target) as f64;
    diff == 0.0 || diff / target as f64 <= cfg.rel_tolerance
}

/// Moves the length of `seq` towards `target` by inserting or deleting masks.
///
/// Returns the input unchanged when it is within tolerance or has fewer than
/// two unmasked tokens. Deletion only ever removes `MASK` tokens and stops
/// early when no gap has a mask left to give.
pub fn adjust_length(seq: &[ScoredToken], target: usize, cfg: &AdjustConfig) -> Vec<ScoredToken> {
    if target == 0 || within_tolerance(seq.len(), target, cfg) {
        return seq.to_vec();
    }
    let gaps = compute_gaps(seq);
    if gaps.is_empty() {
        return seq.to_vec();
    }
    if target > seq.len() {
        insert_masks(seq, &gaps, target - seq.len())
    } else {
        delete_masks(seq, &gaps, seq.len() - target)
    }
}

fn insert_masks(seq: &[ScoredToken], gaps: &[GapEntry], count: usize) -> Vec<ScoredToken> {
    // max-heap on gap; equal gaps pop the leftmost first
    let mut heap: BinaryHeap<(Ratio, Reverse<usize>)> =
        gaps.iter().enumerate().map(|(k, g)| (g.gap, Reverse(k))).collect();
    let mut extra = vec![0usize; gaps.len()];
    for _ in 0..count {
        let Some((gap, Reverse(k))) = heap.pop() else { break };
        extra[k] += 1;
        heap.push((gap - Ratio::from_int(1), Reverse(k)));
    }

    let mut out = Vec::with_capacity(seq.len() + count);
    let mut next_gap = 0;
    for (i, tok) in seq.iter().enumerate() {
        if next_gap < gaps.len() && gaps[next_gap].right_index == i {
            let g = &gaps[next_gap];
            let filler =
                ScoredToken { token: MASK, score: 0.0, position: midpoint(seq[g.left_index].position, tok.position) };
            out.extend(core::iter::repeat_n(filler, extra[next_gap]));
            next_gap += 1;
        }
        out.push(*tok);
    }
    out
}

fn delete_masks(seq: &[ScoredToken], gaps: &[GapEntry], count: usize) -> Vec<ScoredToken> {
    let mut heap: BinaryHeap<Reverse<(Ratio, usize)>> =
        gaps.iter().enumerate().map(|(k, g)| Reverse((g.gap, k))).collect();
    let mut removed = vec![0usize; gaps.len()];
    let mut total = 0;
    while total < count {
        let Some(Reverse((gap, k))) = heap.pop() else { break };
        if removed[k] < gaps[k].masks() {
            removed[k] += 1;
            total += 1;
            heap.push(Reverse((gap + Ratio::from_int(1), k)));
        }
    }

    let mut drop = vec![false; seq.len()];
    for (g, &n) in gaps.iter().zip(&removed) {
        for d in drop.iter_mut().skip(g.left_index + 1).take(n) {
            *d = true;
        }
    }
    seq.iter().zip(drop).filter(|(_, d)| !d).map(|(t, _)| *t).collect()
}

fn midpoint(a: Position, b: Position) -> Position {
    let (ac, bc) = (a.count as i64, b.count as i64);
    Position { sum: a.sum * bc + b.sum * ac, count: 2 * a.count * b.count }
}
