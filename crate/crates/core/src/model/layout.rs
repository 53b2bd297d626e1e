//! Flat parameter layout: every named array is a [`Slot`] in one `Vec<f64>`.

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;
use core::ops::Range;

use super::linalg::{Attention, FeedForward, LayerNorm, Linear};
use super::ModelConfig;

/// A `rows × cols` row-major array at `offset` in the flat buffer.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Slot {
    pub offset: usize,
    pub rows: usize,
    pub cols: usize,
}

impl Slot {
    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn range(&self) -> Range<usize> {
        self.offset..self.offset + self.len()
    }

    pub fn of<'a>(&self, buf: &'a [f64]) -> &'a [f64] {
        &buf[self.range()]
    }

    pub fn of_mut<'a>(&self, buf: &'a mut [f64]) -> &'a mut [f64] {
        &mut buf[self.range()]
    }

    pub(crate) fn row<'a>(&self, buf: &'a [f64], r: usize) -> &'a [f64] {
        let start = self.offset + r * self.cols;
        &buf[start..start + self.cols]
    }

    pub(crate) fn row_mut<'a>(&self, buf: &'a mut [f64], r: usize) -> &'a mut [f64] {
        let start = self.offset + r * self.cols;
        &mut buf[start..start + self.cols]
    }
}

/// How a group is initialised.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Init {
    /// Normal with standard deviation `1/sqrt(rows)`.
    Fan,
    /// Normal with standard deviation `1/sqrt(cols)`.
    Embedding,
    Zeros,
    Ones,
    /// Zeros except the forget-gate quarter, which is one.
    ForgetBias,
}

/// A named parameter array.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Group {
    pub name: String,
    pub slot: Slot,
    pub init: Init,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct EncoderLayer {
    pub attn: Attention,
    pub ln1: LayerNorm,
    pub ffn: FeedForward,
    pub ln2: LayerNorm,
}

#[derive(Clone, Copy, Debug)]
pub(crate) struct DecoderLayer {
    pub self_attn: Attention,
    pub ln1: LayerNorm,
    pub cross_attn: Attention,
    pub ln2: LayerNorm,
    pub ffn: FeedForward,
    pub ln3: LayerNorm,
}

/// Recurrent local head: gates in `i, f, g, o` order along the `4·d` axis.
#[derive(Clone, Copy, Debug)]
pub(crate) struct LocalHead {
    pub wx: Slot,
    pub wh: Slot,
    pub b: Slot,
    pub out: Linear,
}

/// Offsets of every parameter array for one [`ModelConfig`].
#[derive(Clone, Debug)]
pub struct Layout {
    pub(crate) tok_emb: Slot,
    pub(crate) pos_emb: Slot,
    pub(crate) encoder: Vec<EncoderLayer>,
    pub(crate) decoder: Vec<DecoderLayer>,
    pub(crate) head: LocalHead,
    pub(crate) length: Linear,
    groups: Vec<Group>,
    total: usize,
}

struct Builder {
    groups: Vec<Group>,
    total: usize,
}

impl Builder {
    fn slot(&mut self, name: String, rows: usize, cols: usize, init: Init) -> Slot {
        let slot = Slot { offset: self.total, rows, cols };
        self.total += rows * cols;
        self.groups.push(Group { name, slot, init });
        slot
    }

    fn linear(&mut self, prefix: &str, inp: usize, out: usize) -> Linear {
        Linear {
            w: self.slot(format!("{prefix}.w"), inp, out, Init::Fan),
            b: self.slot(format!("{prefix}.b"), 1, out, Init::Zeros),
        }
    }

    fn attention(&mut self, prefix: &str, d: usize, heads: usize) -> Attention {
        Attention {
            q: self.linear(&format!("{prefix}.q"), d, d),
            k: self.linear(&format!("{prefix}.k"), d, d),
            v: self.linear(&format!("{prefix}.v"), d, d),
            o: self.linear(&format!("{prefix}.o"), d, d),
            heads,
        }
    }

    fn norm(&mut self, prefix: &str, d: usize) -> LayerNorm {
        LayerNorm {
            gain: self.slot(format!("{prefix}.gain"), 1, d, Init::Ones),
            bias: self.slot(format!("{prefix}.bias"), 1, d, Init::Zeros),
        }
    }

    fn ffn(&mut self, prefix: &str, d: usize, f: usize) -> FeedForward {
        FeedForward {
            up: self.linear(&format!("{prefix}.up"), d, f),
            down: self.linear(&format!("{prefix}.down"), f, d),
        }
    }
}

impl Layout {
    pub fn new(cfg: &ModelConfig) -> Self {
        let (d, f, h, v, m) = (cfg.d_model, cfg.ffn_dim, cfg.heads, cfg.vocab_size, cfg.max_len);
        let mut b = Builder { groups: Vec::new(), total: 0 };
        let tok_emb = b.slot("embed.token".into(), v, d, Init::Embedding);
        let pos_emb = b.slot("embed.position".into(), m, d, Init::Embedding);
        let encoder = (0..cfg.enc_layers)
            .map(|l| {
                let p = format!("enc{l}");
                EncoderLayer {
                    attn: b.attention(&format!("{p}.self"), d, h),
                    ln1: b.norm(&format!("{p}.ln1"), d),
                    ffn: b.ffn(&format!("{p}.ffn"), d, f),
                    ln2: b.norm(&format!("{p}.ln2"), d),
                }
            })
            .collect();
        let decoder = (0..cfg.dec_layers)
            .map(|l| {
                let p = format!("dec{l}");
                DecoderLayer {
                    self_attn: b.attention(&format!("{p}.self"), d, h),
                    ln1: b.norm(&format!("{p}.ln1"), d),
                    cross_attn: b.attention(&format!("{p}.cross"), d, h),
                    ln2: b.norm(&format!("{p}.ln2"), d),
                    ffn: b.ffn(&format!("{p}.ffn"), d, f),
                    ln3: b.norm(&format!("{p}.ln3"), d),
                }
            })
            .collect();
        let head = LocalHead {
            wx: b.slot("local.wx".into(), d, 4 * d, Init::Fan),
            wh: b.slot("local.wh".into(), d, 4 * d, Init::Fan),
            b: b.slot("local.b".into(), 1, 4 * d, Init::ForgetBias),
            out: b.linear("local.out", d, v),
        };
        let length = b.linear("length", d, m);
        Layout { tok_emb, pos_emb, encoder, decoder, head, length, groups: b.groups, total: b.total }
    }

    /// Named arrays in storage order.
    pub fn groups(&self) -> &[Group] {
        &self.groups
    }

    /// Total number of scalar parameters.
    pub fn total(&self) -> usize {
        self.total
    }
}

/// Closed-form parameter count for a configuration.
pub fn parameter_count(cfg: &ModelConfig) -> usize {
    let (d, f, v, m) = (cfg.d_model, cfg.ffn_dim, cfg.vocab_size, cfg.max_len);
    let attn = 4 * (d * d + d);
    let norm = 2 * d;
    let ffn = d * f + f + f * d + d;
    let embed = v * d + m * d;
    let enc = cfg.enc_layers * (attn + ffn + 2 * norm);
    let dec = cfg.dec_layers * (2 * attn + ffn + 3 * norm);
    let head = 2 * d * 4 * d + 4 * d + d * v + v;
    let length = d * m + m;
    embed + enc + dec + head + length
}
