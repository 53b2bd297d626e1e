//! Synthetic token-mapping task for smoke tests and end-to-end checks.
//!
//! Source sentences are uniform draws over `vocab` words; the target maps
//! every word through a fixed seeded permutation, so the translation is
//! deterministic and monotone.

use lat_core::vocab::{TokenId, Vocabulary};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub type Pair = (Vec<TokenId>, Vec<TokenId>);

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ToyConfig {
    pub vocab: usize,
    pub min_len: usize,
    pub max_len: usize,
    pub train: usize,
    pub test: usize,
    pub seed: u64,
}

impl Default for ToyConfig {
    fn default() -> Self {
        ToyConfig { vocab: 20, min_len: 3, max_len: 12, train: 2000, test: 200, seed: 7 }
    }
}

#[derive(Clone, Debug)]
pub struct ToyTask {
    pub vocab: Vocabulary,
    pub train: Vec<Pair>,
    pub test: Vec<Pair>,
}

impl ToyTask {
    pub fn generate(cfg: &ToyConfig) -> Self {
        let vocab = Vocabulary::from_tokens((0..cfg.vocab).map(|i| format!("w{i:02}")));
        let ids: Vec<TokenId> = (0..cfg.vocab).map(|i| vocab.id(&format!("w{i:02}")).expect("word")).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let mut image = ids.clone();
        image.shuffle(&mut rng);
        let pair = |rng: &mut ChaCha8Rng| -> Pair {
            let len = rng.gen_range(cfg.min_len..=cfg.max_len);
            let picks: Vec<usize> = (0..len).map(|_| rng.gen_range(0..ids.len())).collect();
            (picks.iter().map(|&p| ids[p]).collect(), picks.iter().map(|&p| image[p]).collect())
        };
        let train = (0..cfg.train).map(|_| pair(&mut rng)).collect();
        let test = (0..cfg.test).map(|_| pair(&mut rng)).collect();
        ToyTask { vocab, train, test }
    }

    /// Renders pairs as parallel text lines.
    pub fn lines(&self, pairs: &[Pair]) -> (Vec<String>, Vec<String>) {
        let text = |ids: &Vec<TokenId>| self.vocab.decode_line(ids).expect("toy ids are in range");
        pairs.iter().map(|(s, t)| (text(s), text(t))).unzip()
    }
}
