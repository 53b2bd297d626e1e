//! Local autoregressive translation (LAT) for non-autoregressive decoding.
//!
//! Every decoder position emits a short left-to-right *piece* of `K` tokens
//! instead of a single token. Adjacent pieces overlap, and [`merge`] stitches
//! them into one output with an LCS alignment ([`align`]). Decoding is
//! iterative in the mask-predict style ([`decode`]): low-confidence tokens are
//! re-masked and the sequence is nudged back to the predicted length with
//! [`lenadjust`] between iterations.
//!
//! The crate is `no_std` (it needs `alloc`). File formats, timing and the
//! command line live in the companion `lat` crate.
//!
//! ## Modules
//!
//! - [`vocab`]: vocabulary, special symbols and the scored-token data model
//! - [`align`]: longest common subsequence over token ids
//! - [`merge`]: two-piece merge and the windowed left-to-right scan
//! - [`lenadjust`]: mask insertion/deletion guided by position gaps
//! - [`model`]: toy encoder/decoder with a recurrent local head, training and checkpoints
//! - [`decode`]: length prediction and iterative decoding
//! - [`metrics`]: n-gram repeat rate, corpus BLEU, edit distance, length buckets

#![cfg_attr(not(test), no_std)]
#![deny(missing_debug_implementations)]

extern crate alloc;

pub mod align;
pub mod decode;
mod error;
pub mod lenadjust;
pub mod merge;
pub mod metrics;
pub mod model;
pub mod ratio;
pub mod vocab;

pub use error::{Error, Result};
pub use vocab::{MergedSequence, Piece, Position, ScoredToken, TokenId, Vocabulary};
