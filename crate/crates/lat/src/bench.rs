//! Merge throughput on synthetic pieces.

use std::time::{Duration, Instant};

use lat_core::merge::{merge_all, MergeConfig};
use lat_core::vocab::{TokenId, RESERVED};
use lat_core::Piece;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Debug, PartialEq)]
pub struct BenchRow {
    pub k: usize,
    pub pieces: usize,
    /// Median over repetitions.
    pub time: Duration,
}

impl BenchRow {
    pub fn pieces_per_sec(&self) -> f64 {
        self.pieces as f64 / self.time.as_secs_f64().max(1e-12)
    }
}

/// `n` sliding-window pieces over a random reference, scores in `[-2, 0)`,
/// with one token in ten replaced to force conflicts.
pub fn synth_pieces(n: usize, k: usize, seed: u64) -> Vec<Piece> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let word = |rng: &mut ChaCha8Rng| RESERVED + rng.gen_range(0..64);
    let reference: Vec<TokenId> = (0..n + k).map(|_| word(&mut rng)).collect();
    (0..n)
        .map(|i| {
            let toks: Vec<(TokenId, f64)> = reference[i..i + k]
                .iter()
                .map(|&t| {
                    let t = if rng.gen_bool(0.1) { word(&mut rng) } else { t };
                    (t, -rng.gen_range(0.0..2.0))
                })
                .collect();
            Piece::from_scored(i, &toks)
        })
        .collect()
}

/// Times `merge_all` for every `(k, n)` combination.
pub fn bench_merge(ns: &[usize], ks: &[usize], reps: usize, seed: u64) -> Vec<BenchRow> {
    let mut rows = Vec::new();
    for &k in ks {
        let cfg = MergeConfig::with_k(k);
        for &n in ns {
            let pieces = synth_pieces(n, k, seed);
            let mut times: Vec<Duration> = (0..reps.max(1))
                .map(|_| {
                    let t0 = Instant::now();
                    let merged = merge_all(&pieces, &cfg).expect("non-empty pieces");
                    let dt = t0.elapsed();
                    std::hint::black_box(merged);
                    dt
                })
                .collect();
            times.sort();
            rows.push(BenchRow { k, pieces: n, time: times[times.len() / 2] });
        }
    }
    rows
}
