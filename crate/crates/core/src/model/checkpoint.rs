//! Binary checkpoint format.
//!
//! ```text
//! magic    8 bytes   "LATCKPT\0"
//! version  u32 LE    currently 1
//! cfg_len  u32 LE
//! cfg      cfg_len bytes of UTF-8 "key=value\n" lines (ModelConfig)
//! crc32    u32 LE    CRC-32 (IEEE) of cfg followed by the payload
//! payload  u32 LE array count, then per array in layout order:
//!            u16 LE name length, name bytes, u32 LE rows, u32 LE cols,
//!            rows*cols f64 LE values
//! ```

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use super::{Model, ModelConfig};
use crate::{Error, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LATCKPT\0";
pub const CHECKPOINT_VERSION: u32 = 1;

fn config_text(cfg: &ModelConfig) -> String {
    format!(
        "d_model={}\nheads={}\nffn_dim={}\nenc_layers={}\ndec_layers={}\nk={}\nmax_len={}\nvocab_size={}\nseed={}\n",
        cfg.d_model,
        cfg.heads,
        cfg.ffn_dim,
        cfg.enc_layers,
        cfg.dec_layers,
        cfg.k,
        cfg.max_len,
        cfg.vocab_size,
        cfg.seed
    )
}

fn parse_config(text: &str) -> Result<ModelConfig> {
    let mut cfg = ModelConfig::new(0);
    let mut seen = 0u32;
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        let (key, value) =
            line.split_once('=').ok_or_else(|| Error::MalformedCheckpoint(format!("bad config line {line:?}")))?;
        let bad = || Error::MalformedCheckpoint(format!("bad value for {key}: {value:?}"));
        let (slot, bit): (&mut usize, u32) = match key.trim() {
            "d_model" => (&mut cfg.d_model, 0),
            "heads" => (&mut cfg.heads, 1),
            "ffn_dim" => (&mut cfg.ffn_dim, 2),
            "enc_layers" => (&mut cfg.enc_layers, 3),
            "dec_layers" => (&mut cfg.dec_layers, 4),
            "k" => (&mut cfg.k, 5),
            "max_len" => (&mut cfg.max_len, 6),
            "vocab_size" => (&mut cfg.vocab_size, 7),
            "seed" => {
                cfg.seed = value.trim().parse().map_err(|_| bad())?;
                seen |= 1 << 8;
                continue;
            }
            other => return Err(Error::MalformedCheckpoint(format!("unknown config key {other:?}"))),
        };
        *slot = value.trim().parse().map_err(|_| bad())?;
        seen |= 1 << bit;
    }
    if seen != 0x1ff {
        return Err(Error::MalformedCheckpoint("incomplete config block".to_string()));
    }
    Ok(cfg)
}

/// Serialises a model; the bytes are a pure function of config and parameters.
pub fn save_checkpoint(model: &Model) -> Vec<u8> {
    let cfg = config_text(model.config());
    let mut payload = Vec::with_capacity(model.num_params() * 8 + 1024);
    let groups = model.layout().groups();
    payload.extend_from_slice(&(groups.len() as u32).to_le_bytes());
    for g in groups {
        payload.extend_from_slice(&(g.name.len() as u16).to_le_bytes());
        payload.extend_from_slice(g.name.as_bytes());
        payload.extend_from_slice(&(g.slot.rows as u32).to_le_bytes());
        payload.extend_from_slice(&(g.slot.cols as u32).to_le_bytes());
        for v in g.slot.of(model.params()) {
            payload.extend_from_slice(&v.to_le_bytes());
        }
    }
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(cfg.as_bytes());
    hasher.update(&payload);
    let crc = hasher.finalize();

    let mut out = Vec::with_capacity(20 + cfg.len() + payload.len());
    out.extend_from_slice(CHECKPOINT_MAGIC);
    out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
    out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
    out.extend_from_slice(cfg.as_bytes());
    out.extend_from_slice(&crc.to_le_bytes());
    out.extend_from_slice(&payload);
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    at: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.at.checked_add(n).filter(|&e| e <= self.buf.len());
        let end = end.ok_or_else(|| Error::MalformedCheckpoint("unexpected end of data".to_string()))?;
        let s = &self.buf[self.at..end];
        self.at = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().expect("2 bytes")))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
}

/// Parses and validates a checkpoint.
pub fn load_checkpoint(bytes: &[u8]) -> Result<Model> {
    let mut r = Reader { buf: bytes, at: 0 };
    let header_err = |_| Error::ChecksumMismatch;
    if r.take(8).map_err(header_err)? != CHECKPOINT_MAGIC {
        return Err(Error::MalformedCheckpoint("bad magic".to_string()));
    }
    let version = r.u32().map_err(header_err)?;
    if version != CHECKPOINT_VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let cfg_len = r.u32().map_err(header_err)? as usize;
    let cfg_bytes = r.take(cfg_len).map_err(header_err)?;
    let crc = r.u32().map_err(header_err)?;
    let payload = &bytes[r.at..];
    let mut hasher = crc32fast::Hasher::new();
    hasher.update(cfg_bytes);
    hasher.update(payload);
    if hasher.finalize() != crc {
        return Err(Error::ChecksumMismatch);
    }

    let text =
        core::str::from_utf8(cfg_bytes).map_err(|_| Error::MalformedCheckpoint("config is not UTF-8".to_string()))?;
    let config = parse_config(text)?;
    config.validate().map_err(|e| Error::MalformedCheckpoint(format!("{e}")))?;
    let layout = super::Layout::new(&config);

    let mut r = Reader { buf: payload, at: 0 };
    let count = r.u32()? as usize;
    if count != layout.groups().len() {
        return Err(Error::MalformedCheckpoint(format!(
            "config implies {} arrays, file has {count}",
            layout.groups().len()
        )));
    }
    let mut params = Vec::with_capacity(layout.total());
    for g in layout.groups() {
        let name_len = r.u16()? as usize;
        let name = r.take(name_len)?;
        let (rows, cols) = (r.u32()? as usize, r.u32()? as usize);
        if name != g.name.as_bytes() || rows != g.slot.rows || cols != g.slot.cols {
            return Err(Error::MalformedCheckpoint(format!(
                "array {} does not match config (expected {}x{})",
                String::from_utf8_lossy(name),
                g.slot.rows,
                g.slot.cols
            )));
        }
        for chunk in r.take(rows * cols * 8)?.chunks_exact(8) {
            params.push(f64::from_le_bytes(chunk.try_into().expect("8 bytes")));
        }
    }
    if r.at != payload.len() {
        return Err(Error::MalformedCheckpoint("trailing bytes".to_string()));
    }
    Model::from_params(config, params)
}
