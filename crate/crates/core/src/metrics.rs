//! Evaluation metrics: n-gram repeat rate, corpus BLEU, edit distance and
//! BLEU by reference-length bucket.

use alloc::collections::BTreeMap;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NrrConfig {
    /// n-gram order.
    pub n: usize,
    /// Largest start distance at which a repeat counts as nearby.
    pub window: usize,
}

impl NrrConfig {
    /// Order `n` with the default window `W = n`.
    pub fn new(n: usize) -> Self {
        NrrConfig { n, window: n }
    }
}

/// Percentage of n-grams that are repeated by an identical n-gram starting
/// `1..=window` tokens later in the same sentence, pooled over the corpus.
pub fn ngram_repeat_rate<'a, T, I>(corpus: I, cfg: &NrrConfig) -> f64
where
    T: PartialEq + 'a,
    I: IntoIterator<Item = &'a [T]>,
{
    let n = cfg.n.max(1);
    let (mut repeated, mut total) = (0usize, 0usize);
    for sent in corpus {
        if sent.len() < n {
            continue;
        }
        let starts = sent.len() - n + 1;
        total += starts;
        for i in 0..starts {
            let gram = &sent[i..i + n];
            let last = (i + cfg.window).min(starts - 1);
            if (i + 1..=last).any(|j| &sent[j..j + n] == gram) {
                repeated += 1;
            }
        }
    }
    if total == 0 {
        0.0
    } else {
        100.0 * repeated as f64 / total as f64
    }
}

/// Clipped n-gram matches and totals for one corpus, orders `1..=max_n`.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct BleuStats {
    pub matches: Vec<usize>,
    pub totals: Vec<usize>,
    pub hyp_len: usize,
    pub ref_len: usize,
}

impl BleuStats {
    pub fn new(max_n: usize) -> Self {
        BleuStats { matches: vec![0; max_n], totals: vec![0; max_n], hyp_len: 0, ref_len: 0 }
    }

    pub fn add<T: Ord>(&mut self, hyp: &[T], reference: &[T]) {
        self.hyp_len += hyp.len();
        self.ref_len += reference.len();
        for n in 1..=self.matches.len() {
            if hyp.len() < n {
                break;
            }
            let mut ref_counts: BTreeMap<&[T], usize> = BTreeMap::new();
            for g in reference.windows(n) {
                *ref_counts.entry(g).or_insert(0) += 1;
            }
            let mut hyp_counts: BTreeMap<&[T], usize> = BTreeMap::new();
            for g in hyp.windows(n) {
                *hyp_counts.entry(g).or_insert(0) += 1;
            }
            let clipped: usize = hyp_counts.iter().map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0))).sum();
            self.matches[n - 1] += clipped;
            self.totals[n - 1] += hyp.len() + 1 - n;
        }
    }

    /// BLEU in `[0, 100]`.
    ///
    /// Orders with no hypothesis n-grams at all are left out of the geometric
    /// mean; any counted order with zero matches gives 0. No smoothing.
    pub fn score(&self) -> f64 {
        let mut log_sum = 0.0;
        let mut orders = 0usize;
        for (&m, &t) in self.matches.iter().zip(&self.totals) {
            if t == 0 {
                continue;
            }
            if m == 0 {
                return 0.0;
            }
            log_sum += libm::log(m as f64 / t as f64);
            orders += 1;
        }
        if orders == 0 || self.hyp_len == 0 {
            return 0.0;
        }
        let bp =
            if self.hyp_len >= self.ref_len { 1.0 } else { libm::exp(1.0 - self.ref_len as f64 / self.hyp_len as f64) };
        100.0 * bp * libm::exp(log_sum / orders as f64)
    }
}

/// Corpus-level BLEU with uniform weights over orders `1..=max_n`.
pub fn corpus_bleu<T: Ord>(hypotheses: &[Vec<T>], references: &[Vec<T>], max_n: usize) -> Result<f64> {
    if hypotheses.len() != references.len() {
        return Err(Error::LengthMismatch { left: hypotheses.len(), right: references.len() });
    }
    let mut stats = BleuStats::new(max_n);
    for (h, r) in hypotheses.iter().zip(references) {
        stats.add(h, r);
    }
    Ok(stats.score())
}

/// Token-level edit distance with unit costs.
pub fn levenshtein<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let mut prev: Vec<usize> = (0..=b.len()).collect();
    let mut cur = vec![0usize; b.len() + 1];
    for (i, x) in a.iter().enumerate() {
        cur[0] = i + 1;
        for (j, y) in b.iter().enumerate() {
            let sub = prev[j] + usize::from(x != y);
            cur[j + 1] = sub.min(prev[j + 1] + 1).min(cur[j] + 1);
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// One row of a length-bucket report; bucket covers reference lengths `lo..hi`.
#[derive(Clone, Debug, PartialEq)]
pub struct BucketRow {
    pub lo: usize,
    /// Exclusive upper bound, `None` for the open last bucket.
    pub hi: Option<usize>,
    pub count: usize,
    /// `None` when the bucket is empty.
    pub bleu: Option<f64>,
}

/// Groups `(reference, hypothesis)` pairs by reference length and scores each group.
///
/// `edges` are increasing cut points: `[10, 20]` gives buckets `0..10`,
/// `10..20` and `20..`. No edges means a single bucket.
pub fn bucket_report<T: Ord + Clone>(pairs: &[(Vec<T>, Vec<T>)], edges: &[usize], max_n: usize) -> Vec<BucketRow> {
    let mut bounds = Vec::with_capacity(edges.len() + 1);
    let mut lo = 0;
    for &e in edges {
        bounds.push((lo, Some(e)));
        lo = e;
    }
    bounds.push((lo, None));

    bounds
        .into_iter()
        .map(|(lo, hi)| {
            let mut stats = BleuStats::new(max_n);
            let mut count = 0;
            for (r, h) in pairs {
                if r.len() >= lo && hi.is_none_or(|hi| r.len() < hi) {
                    stats.add(h, r);
                    count += 1;
                }
            }
            BucketRow { lo, hi, count, bleu: (count > 0).then(|| stats.score()) }
        })
        .collect()
}
