//! Longest common subsequence over token ids.

use alloc::vec;
use alloc::vec::Vec;

use crate::vocab::TokenId;

/// Ordered `(i1, i2)` index pairs, strictly increasing in both coordinates,
/// with `s1[i1] == s2[i2]` for every pair.
pub type MatchedPairs = Vec<(usize, usize)>;

/// Returns one maximum-length common subsequence of `s1` and `s2` as index pairs.
///
/// Quadratic table; intended for merge windows (a handful of tokens).
/// Backtracking runs from the ends and always takes an available match. When
/// both non-matching moves keep the optimum it drops the last token of `s2`
/// first, which prefers aligning the tail of `s1` with the head of `s2`.
pub fn lcs(s1: &[TokenId], s2: &[TokenId]) -> MatchedPairs {
    let (n, m) = (s1.len(), s2.len());
    if n == 0 || m == 0 {
        return Vec::new();
    }
    let w = m + 1;
    // table[i * w + j] = |LCS(s1[..i], s2[..j])|
    let mut table = vec![0u16; (n + 1) * w];
    for i in 1..=n {
        for j in 1..=m {
            table[i * w + j] = if s1[i - 1] == s2[j - 1] {
                table[(i - 1) * w + j - 1] + 1
            } else {
                table[(i - 1) * w + j].max(table[i * w + j - 1])
            };
        }
    }

    let mut pairs = Vec::with_capacity(table[n * w + m] as usize);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        if table[i * w + j - 1] == table[i * w + j] {
            j -= 1;
        } else if s1[i - 1] == s2[j - 1] {
            pairs.push((i - 1, j - 1));
            i -= 1;
            j -= 1;
        } else {
            i -= 1;
        }
    }
    pairs.reverse();
    pairs
}

/// Length of the LCS without backtracking.
pub fn lcs_len(s1: &[TokenId], s2: &[TokenId]) -> usize {
    let m = s2.len();
    let mut prev = vec![0usize; m + 1];
    let mut cur = vec![0usize; m + 1];
    for &a in s1 {
        for j in 1..=m {
            cur[j] = if a == s2[j - 1] { prev[j - 1] + 1 } else { prev[j].max(cur[j - 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[m]
}
