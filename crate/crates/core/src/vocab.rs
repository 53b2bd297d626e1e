//! Vocabulary, special symbols and the piece/sequence data model.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::ratio::Ratio;
use crate::{Error, Result};

/// Index into a [`Vocabulary`].
pub type TokenId = u32;

pub const PAD: TokenId = 0;
/// Start-of-piece symbol fed to the local head at its first step.
pub const SOP: TokenId = 1;
pub const MASK: TokenId = 2;
pub const EOS: TokenId = 3;
pub const UNK: TokenId = 4;
/// Prepended to every encoder input; its state predicts the target length.
pub const LENGTH: TokenId = 5;

/// Number of reserved ids; ordinary tokens start here.
pub const RESERVED: u32 = 6;

const RESERVED_NAMES: [&str; RESERVED as usize] = ["⟨pad⟩", "⟨sop⟩", "⟨mask⟩", "⟨eos⟩", "⟨unk⟩", "⟨length⟩"];

/// Returns true for the reserved symbols.
pub fn is_reserved(id: TokenId) -> bool {
    id < RESERVED
}

/// Bidirectional id/string map. Reserved symbols occupy ids `0..RESERVED`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: BTreeMap<String, TokenId>,
}

impl Vocabulary {
    /// Builds a vocabulary from ordinary tokens in id order (reserved symbols are added).
    ///
    /// Duplicates and tokens that collide with reserved renderings are skipped.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        let mut v =
            Vocabulary { tokens: RESERVED_NAMES.iter().map(|s| s.to_string()).collect(), index: BTreeMap::new() };
        for t in tokens {
            v.push(t.as_ref());
        }
        v
    }

    /// Appends `token` if absent and returns its id.
    pub fn push(&mut self, token: &str) -> TokenId {
        if let Some(id) = self.id(token) {
            return id;
        }
        if let Some(id) = RESERVED_NAMES.iter().position(|r| *r == token) {
            return id as TokenId;
        }
        let id = self.tokens.len() as TokenId;
        self.tokens.push(token.to_string());
        self.index.insert(token.to_string(), id);
        id
    }

    /// Id of an ordinary token.
    pub fn id(&self, token: &str) -> Option<TokenId> {
        self.index.get(token).copied()
    }

    /// Id of a token, falling back to reserved renderings.
    pub fn id_or_reserved(&self, token: &str) -> Option<TokenId> {
        self.id(token).or_else(|| RESERVED_NAMES.iter().position(|r| *r == token).map(|i| i as TokenId))
    }

    pub fn token(&self, id: TokenId) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    /// Total size including reserved symbols.
    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.len() == RESERVED as usize
    }

    /// Ordinary tokens in id order, the content of a vocabulary file.
    pub fn ordinary(&self) -> impl Iterator<Item = &str> {
        self.tokens[RESERVED as usize..].iter().map(String::as_str)
    }

    /// Whitespace split; unknown tokens become [`UNK`]. No EOS is appended.
    pub fn encode_line(&self, line: &str) -> Vec<TokenId> {
        line.split_whitespace().map(|w| self.id(w).unwrap_or(UNK)).collect()
    }

    /// Space-joins tokens; reserved ids render as `⟨sop⟩`, `⟨mask⟩`, ...
    pub fn decode_line(&self, ids: &[TokenId]) -> Result<String> {
        let mut out = String::new();
        for (i, &id) in ids.iter().enumerate() {
            let tok = self.token(id).ok_or(Error::IdOutOfRange(id))?;
            if i > 0 {
                out.push(' ');
            }
            out.push_str(tok);
        }
        Ok(out)
    }
}

/// Counts whitespace tokens and keeps those seen at least `min_count` times.
///
/// Ids follow the reserved block, ordered by descending frequency with ties
/// broken lexicographically.
pub fn build_vocab<'a, I>(corpus: I, min_count: usize) -> Result<Vocabulary>
where
    I: IntoIterator<Item = &'a str>,
{
    let mut counts: BTreeMap<&'a str, usize> = BTreeMap::new();
    let mut lines = 0usize;
    for line in corpus {
        lines += 1;
        for w in line.split_whitespace() {
            *counts.entry(w).or_insert(0) += 1;
        }
    }
    if lines == 0 {
        return Err(Error::EmptyCorpus);
    }
    let min_count = min_count.max(1);
    let mut kept: Vec<(&str, usize)> = counts.into_iter().filter(|&(_, c)| c >= min_count).collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
    Ok(Vocabulary::from_tokens(kept.into_iter().map(|(w, _)| w)))
}

/// Fractional position stored as an unreduced average `sum / count`.
///
/// Aligning two tokens adds sums and counts, so a token built from `n`
/// aligned sources carries the mean of their positions exactly.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Position {
    pub sum: i64,
    pub count: u32,
}

impl Position {
    pub fn at(p: i64) -> Self {
        Position { sum: p, count: 1 }
    }

    pub fn merge(self, other: Position) -> Position {
        Position { sum: self.sum + other.sum, count: self.count + other.count }
    }

    pub fn value(&self) -> Ratio {
        Ratio::new(self.sum as i128, self.count as i128)
    }

    pub fn to_f64(&self) -> f64 {
        self.sum as f64 / self.count as f64
    }
}

/// A token id with its log-probability and position.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ScoredToken {
    pub token: TokenId,
    pub score: f64,
    pub position: Position,
}

impl ScoredToken {
    pub fn new(token: TokenId, score: f64, position: i64) -> Self {
        ScoredToken { token, score, position: Position::at(position) }
    }
}

/// The local output anchored at decoder position `anchor`.
#[derive(Clone, Debug, PartialEq)]
pub struct Piece {
    pub anchor: usize,
    pub tokens: Vec<ScoredToken>,
}

impl Piece {
    /// Builds a piece from raw `(token, score)` outputs; token `j` sits at `anchor + j`.
    pub fn from_scored(anchor: usize, outputs: &[(TokenId, f64)]) -> Self {
        let tokens =
            outputs.iter().enumerate().map(|(j, &(t, s))| ScoredToken::new(t, s, (anchor + j) as i64)).collect();
        Piece { anchor, tokens }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Output of the piece merger.
///
/// Positions are not monotone in general: conflict resolution may keep a
/// span from either side.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct MergedSequence {
    pub tokens: Vec<ScoredToken>,
}

impl MergedSequence {
    pub fn ids(&self) -> Vec<TokenId> {
        self.tokens.iter().map(|t| t.token).collect()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}
