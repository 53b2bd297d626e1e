//! Training examples: target masking, deletion augmentation and gold pieces.

use alloc::vec::Vec;

use rand::seq::index::sample;
use rand::Rng;

use crate::vocab::{TokenId, EOS, MASK, PAD};

/// One training pair with its sampled masking and (optional) deletions.
#[derive(Clone, Debug, PartialEq)]
pub struct TrainExample {
    pub source: Vec<TokenId>,
    /// Target tokens followed by `EOS`.
    pub target: Vec<TokenId>,
    /// Decoder input after masking and deletion.
    pub input: Vec<TokenId>,
    /// Original target index of every decoder input position.
    pub origin: Vec<usize>,
    /// Masked target indices, ascending.
    pub masked: Vec<usize>,
    /// `input.len() × K` gold local sequences.
    pub gold: Vec<TokenId>,
    /// Whether each gold token's original target index is masked.
    pub gold_masked: Vec<bool>,
    pub k: usize,
}

impl TrainExample {
    /// Builds an example from an explicit masking and surviving-position map.
    pub fn new(source: &[TokenId], target: &[TokenId], masked: &[usize], origin: &[usize], k: usize) -> Self {
        let mut full_input: Vec<TokenId> = target.to_vec();
        let mut is_masked = alloc::vec![false; target.len() + 1];
        for &i in masked {
            full_input[i] = MASK;
            is_masked[i] = true;
        }
        let input = origin.iter().map(|&o| full_input[o]).collect();
        let gold = gold_pieces(target, origin, k);
        let gold_masked = origin
            .iter()
            .flat_map(|&o| (0..k).map(move |j| o + j))
            .map(|t| t < is_masked.len() && is_masked[t])
            .collect();
        let mut with_eos = target.to_vec();
        with_eos.push(EOS);
        let mut masked = masked.to_vec();
        masked.sort_unstable();
        TrainExample {
            source: source.to_vec(),
            target: with_eos,
            input,
            origin: origin.to_vec(),
            masked,
            gold,
            gold_masked,
            k,
        }
    }

    /// Samples masking and, with probability `delete_prob`, a deletion.
    pub fn sample<R: Rng + ?Sized>(
        rng: &mut R,
        source: &[TokenId],
        target: &[TokenId],
        k: usize,
        delete_frac: f64,
        delete_prob: f64,
    ) -> Self {
        let (input, masked) = mask_sample(rng, target);
        let origin: Vec<usize> = if target.len() >= 2 && delete_prob > 0.0 && rng.gen_bool(delete_prob.min(1.0)) {
            deletion_augment(rng, &input, delete_frac).1
        } else {
            (0..target.len()).collect()
        };
        TrainExample::new(source, target, &masked, &origin, k)
    }

    /// Number of real target tokens (the length class to predict).
    pub fn target_len(&self) -> usize {
        self.target.len() - 1
    }
}

/// Draws a masking size uniformly from `1..=N` and masks that many distinct positions.
///
/// Returns the masked input and the masked indices in ascending order.
pub fn mask_sample<R: Rng + ?Sized>(rng: &mut R, target: &[TokenId]) -> (Vec<TokenId>, Vec<usize>) {
    let n = target.len();
    assert!(n >= 1, "cannot mask an empty target");
    let m = rng.gen_range(1..=n);
    let mut idx = sample(rng, n, m).into_vec();
    idx.sort_unstable();
    let mut input = target.to_vec();
    for &i in &idx {
        input[i] = MASK;
    }
    (input, idx)
}

/// Upper bound on deletions for an input of length `n`: `max(1, floor(frac·n))`.
pub fn max_deletions(n: usize, delete_frac: f64) -> usize {
    (libm::floor(delete_frac * n as f64) as usize).max(1)
}

/// Deletes `d ~ U{1..max_deletions}` distinct positions from the decoder input.
///
/// Returns the shortened input and, per surviving position, its original index.
pub fn deletion_augment<R: Rng + ?Sized>(
    rng: &mut R,
    input: &[TokenId],
    delete_frac: f64,
) -> (Vec<TokenId>, Vec<usize>) {
    let n = input.len();
    assert!(n >= 2, "deletion needs at least two positions");
    let d = rng.gen_range(1..=max_deletions(n, delete_frac).min(n - 1));
    let mut gone = alloc::vec![false; n];
    for i in sample(rng, n, d) {
        gone[i] = true;
    }
    let origin: Vec<usize> = (0..n).filter(|&i| !gone[i]).collect();
    (origin.iter().map(|&o| input[o]).collect(), origin)
}

/// Gold local sequences `T[o], T[o+1], …, T[o+K-1]` for each origin `o`.
///
/// The first step past the end is `EOS`, later ones are `PAD`.
pub fn gold_pieces(target: &[TokenId], origin: &[usize], k: usize) -> Vec<TokenId> {
    let n = target.len();
    let mut gold = Vec::with_capacity(origin.len() * k);
    for &o in origin {
        for t in o..o + k {
            gold.push(match t.cmp(&n) {
                core::cmp::Ordering::Less => target[t],
                core::cmp::Ordering::Equal => EOS,
                core::cmp::Ordering::Greater => PAD,
            });
        }
    }
    gold
}
