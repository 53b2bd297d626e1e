//! Corpus, vocabulary, checkpoint and piece files.

use std::fs;
use std::path::Path;

use lat_core::model::{load_checkpoint, save_checkpoint, Model};
use lat_core::vocab::{TokenId, Vocabulary};
use lat_core::{Piece, ScoredToken};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

pub fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// One sentence per line.
pub fn read_lines(path: &Path) -> Result<Vec<String>> {
    Ok(read_text(path)?.lines().map(str::to_owned).collect())
}

/// Source and target corpora, which must have the same number of lines.
pub fn read_parallel(source: &Path, target: &Path) -> Result<(Vec<String>, Vec<String>)> {
    let src = read_lines(source)?;
    let tgt = read_lines(target)?;
    if src.len() != tgt.len() {
        return Err(Error::CorpusMismatch { source_lines: src.len(), target_lines: tgt.len() });
    }
    Ok((src, tgt))
}

/// Ordinary tokens, one per line; line `n` (from 0) holds id `n + RESERVED`.
pub fn write_vocab(path: &Path, vocab: &Vocabulary) -> Result<()> {
    let mut text = String::new();
    for t in vocab.ordinary() {
        text.push_str(t);
        text.push('\n');
    }
    write_text(path, &text)
}

pub fn read_vocab(path: &Path) -> Result<Vocabulary> {
    let text = read_text(path)?;
    let vocab = Vocabulary::from_tokens(text.lines());
    if vocab.ordinary().count() != text.lines().count() {
        return Err(Error::Invalid(format!("{}: duplicate or reserved token in vocabulary", path.display())));
    }
    Ok(vocab)
}

pub fn save_model(path: &Path, model: &Model) -> Result<()> {
    fs::write(path, save_checkpoint(model)).map_err(|e| Error::io(path, e))
}

pub fn load_model(path: &Path) -> Result<Model> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(load_checkpoint(&bytes)?)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct JsonToken {
    t: String,
    s: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct JsonLine {
    pieces: Vec<Vec<JsonToken>>,
}

/// Parses one `{"pieces": [[{"t": .., "s": ..}, ..], ..]}` line.
///
/// Anchors follow list order. Token strings are interned into `vocab`;
/// reserved renderings such as `⟨eos⟩` map to their reserved ids.
pub fn parse_pieces(line: &str, vocab: &mut Vocabulary) -> std::result::Result<Vec<Piece>, String> {
    let parsed: JsonLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    let mut pieces = Vec::with_capacity(parsed.pieces.len());
    for (anchor, toks) in parsed.pieces.iter().enumerate() {
        let mut out = Vec::with_capacity(toks.len());
        for tok in toks {
            if !tok.s.is_finite() {
                return Err(format!("piece {anchor}: score is not finite"));
            }
            out.push((vocab.push(&tok.t), tok.s));
        }
        pieces.push(Piece::from_scored(anchor, &out));
    }
    Ok(pieces)
}

/// Reads a whole piece file; the error names the first bad line (1-based).
pub fn read_pieces(path: &Path, vocab: &mut Vocabulary) -> Result<Vec<Vec<Piece>>> {
    read_lines(path)?
        .iter()
        .enumerate()
        .map(|(i, line)| {
            parse_pieces(line, vocab).map_err(|message| Error::Json { path: path.to_path_buf(), line: i + 1, message })
        })
        .collect()
}

/// Serialises pieces back to one JSON line.
pub fn pieces_to_json(pieces: &[Piece], vocab: &Vocabulary) -> Result<String> {
    let render = |t: &ScoredToken| -> Result<JsonToken> {
        let name = vocab.token(t.token).ok_or(lat_core::Error::IdOutOfRange(t.token))?;
        Ok(JsonToken { t: name.to_owned(), s: t.score })
    };
    let line =
        JsonLine { pieces: pieces.iter().map(|p| p.tokens.iter().map(render).collect()).collect::<Result<_>>()? };
    Ok(serde_json::to_string(&line).expect("pieces serialise"))
}

/// Sliding-window pieces of `reference` with a constant score.
pub fn window_pieces(reference: &[TokenId], k: usize, score: f64) -> Vec<Piece> {
    (0..reference.len())
        .map(|i| {
            let toks: Vec<(TokenId, f64)> =
                reference[i..(i + k).min(reference.len())].iter().map(|&t| (t, score)).collect();
            Piece::from_scored(i, &toks)
        })
        .collect()
}
