//! Flat `key = value` run configuration.
//!
//! Values resolve as defaults, then the config file, then command-line flags.
//! Blank lines and `#` comments are ignored.

use std::fmt::Write as _;
use std::path::Path;
use std::str::FromStr;

use lat_core::decode::DecodeConfig;
use lat_core::lenadjust::AdjustConfig;
use lat_core::merge::MergeConfig;
use lat_core::metrics::NrrConfig;
use lat_core::model::{ModelConfig, TrainConfig};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct Settings {
    pub seed: u64,
    pub k: usize,
    /// Worker threads for sentence-parallel commands; `0` uses every core.
    pub threads: usize,

    pub d_model: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub enc_layers: usize,
    pub dec_layers: usize,
    pub max_len: usize,
    pub min_count: usize,

    pub alpha: f64,
    pub delete_frac: f64,
    pub delete_prob: f64,
    pub lr: f64,
    pub lr_decay: bool,
    pub batch_size: usize,
    pub steps: usize,
    pub grad_clip: f64,

    pub iterations: usize,
    pub length_offset: i64,
    pub rel_tolerance: f64,
    pub empty_span_score: f64,

    /// `None` means `W = n` for every order.
    pub nrr_window: Option<usize>,
    pub bleu_order: usize,
    pub buckets: Vec<usize>,
}

impl Default for Settings {
    fn default() -> Self {
        let model = ModelConfig::new(0);
        let train = TrainConfig::default();
        let decode = DecodeConfig::for_k(model.k);
        Settings {
            seed: 0,
            k: model.k,
            threads: 0,
            d_model: model.d_model,
            heads: model.heads,
            ffn_dim: model.ffn_dim,
            enc_layers: model.enc_layers,
            dec_layers: model.dec_layers,
            max_len: model.max_len,
            min_count: 1,
            alpha: train.alpha,
            delete_frac: train.delete_frac,
            delete_prob: train.delete_prob,
            lr: train.lr,
            lr_decay: train.lr_decay,
            batch_size: train.batch_size,
            steps: train.steps,
            grad_clip: train.grad_clip,
            iterations: decode.iterations,
            length_offset: decode.length_offset,
            rel_tolerance: decode.adjust.rel_tolerance,
            empty_span_score: decode.merge.empty_span_score,
            nrr_window: None,
            bleu_order: 4,
            buckets: vec![10, 20, 30, 40],
        }
    }
}

fn parse<T: FromStr>(key: &str, value: &str) -> std::result::Result<T, String> {
    value.parse().map_err(|_| format!("bad value for {key}: {value:?}"))
}

impl Settings {
    /// Sets one key from its text form.
    pub fn set(&mut self, key: &str, value: &str) -> std::result::Result<(), String> {
        let v = value.trim();
        match key.trim() {
            "seed" => self.seed = parse(key, v)?,
            "k" => self.k = parse(key, v)?,
            "threads" => self.threads = parse(key, v)?,
            "d_model" => self.d_model = parse(key, v)?,
            "heads" => self.heads = parse(key, v)?,
            "ffn_dim" => self.ffn_dim = parse(key, v)?,
            "enc_layers" => self.enc_layers = parse(key, v)?,
            "dec_layers" => self.dec_layers = parse(key, v)?,
            "max_len" => self.max_len = parse(key, v)?,
            "min_count" => self.min_count = parse(key, v)?,
            "alpha" => self.alpha = parse(key, v)?,
            "delete_frac" => self.delete_frac = parse(key, v)?,
            "delete_prob" => self.delete_prob = parse(key, v)?,
            "lr" => self.lr = parse(key, v)?,
            "lr_decay" => self.lr_decay = parse(key, v)?,
            "batch_size" => self.batch_size = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "grad_clip" => self.grad_clip = parse(key, v)?,
            "iterations" => self.iterations = parse(key, v)?,
            "length_offset" => self.length_offset = parse(key, v)?,
            "rel_tolerance" => self.rel_tolerance = parse(key, v)?,
            "empty_span_score" => self.empty_span_score = parse(key, v)?,
            "nrr_window" => self.nrr_window = if v == "n" { None } else { Some(parse(key, v)?) },
            "bleu_order" => self.bleu_order = parse(key, v)?,
            "buckets" => {
                self.buckets = if v.is_empty() {
                    Vec::new()
                } else {
                    v.split(',').map(|e| parse(key, e.trim())).collect::<std::result::Result<_, _>>()?
                }
            }
            other => return Err(format!("unknown key {other:?}")),
        }
        Ok(())
    }

    /// Applies every `key = value` line of `text`; `path` is only used in messages.
    pub fn apply_text(&mut self, text: &str, path: &Path) -> Result<()> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |message: String| Error::Config { path: path.to_path_buf(), line: i + 1, message };
            let (key, value) = line.split_once('=').ok_or_else(|| err("expected key = value".into()))?;
            self.set(key, value).map_err(err)?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<()> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        self.apply_text(&text, path)
    }

    /// Every key in a fixed order, readable back by [`Settings::apply_text`].
    pub fn render(&self) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &dyn std::fmt::Display| {
            let _ = writeln!(s, "{k} = {v}");
        };
        kv("seed", &self.seed);
        kv("k", &self.k);
        kv("threads", &self.threads);
        kv("d_model", &self.d_model);
        kv("heads", &self.heads);
        kv("ffn_dim", &self.ffn_dim);
        kv("enc_layers", &self.enc_layers);
        kv("dec_layers", &self.dec_layers);
        kv("max_len", &self.max_len);
        kv("min_count", &self.min_count);
        kv("alpha", &self.alpha);
        kv("delete_frac", &self.delete_frac);
        kv("delete_prob", &self.delete_prob);
        kv("lr", &self.lr);
        kv("lr_decay", &self.lr_decay);
        kv("batch_size", &self.batch_size);
        kv("steps", &self.steps);
        kv("grad_clip", &self.grad_clip);
        kv("iterations", &self.iterations);
        kv("length_offset", &self.length_offset);
        kv("rel_tolerance", &self.rel_tolerance);
        kv("empty_span_score", &self.empty_span_score);
        match self.nrr_window {
            Some(w) => kv("nrr_window", &w),
            None => kv("nrr_window", &"n"),
        }
        kv("bleu_order", &self.bleu_order);
        let buckets: Vec<String> = self.buckets.iter().map(|b| b.to_string()).collect();
        kv("buckets", &buckets.join(","));
        s
    }

    pub fn model_config(&self, vocab_size: usize) -> ModelConfig {
        ModelConfig {
            d_model: self.d_model,
            heads: self.heads,
            ffn_dim: self.ffn_dim,
            enc_layers: self.enc_layers,
            dec_layers: self.dec_layers,
            k: self.k,
            max_len: self.max_len,
            vocab_size,
            seed: self.seed,
        }
    }

    pub fn train_config(&self) -> TrainConfig {
        TrainConfig {
            alpha: self.alpha,
            delete_frac: self.delete_frac,
            delete_prob: self.delete_prob,
            lr: self.lr,
            lr_decay: self.lr_decay,
            batch_size: self.batch_size,
            steps: self.steps,
            grad_clip: self.grad_clip,
            seed: self.seed,
        }
    }

    pub fn merge_config(&self, k: usize) -> MergeConfig {
        MergeConfig { k, empty_span_score: self.empty_span_score }
    }

    /// Decoding settings for a model with `k` local steps.
    pub fn decode_config(&self, k: usize) -> DecodeConfig {
        DecodeConfig {
            iterations: self.iterations,
            length_offset: self.length_offset,
            merge: self.merge_config(k),
            adjust: AdjustConfig { rel_tolerance: self.rel_tolerance },
            seed: self.seed,
        }
    }

    pub fn nrr_config(&self, n: usize) -> NrrConfig {
        NrrConfig { n, window: self.nrr_window.unwrap_or(n) }
    }

    /// Rayon pool honouring `threads`.
    pub fn pool(&self) -> rayon::ThreadPool {
        rayon::ThreadPoolBuilder::new().num_threads(self.threads).build().expect("thread pool")
    }
}
