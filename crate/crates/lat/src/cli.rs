//! The `lat` command line: train, decode, merge, eval and bench-merge.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use lat_core::decode::{iterative_decode, iterative_decode_with, Stage, StageTimer};
use lat_core::merge::merge_all;
use lat_core::metrics::{bucket_report, corpus_bleu, ngram_repeat_rate};
use lat_core::model::{train, Model};
use lat_core::vocab::{build_vocab, TokenId, Vocabulary};
use rayon::prelude::*;

use crate::bench::bench_merge;
use crate::config::Settings;
use crate::error::{Error, Result};
use crate::io;

#[derive(Debug, Parser)]
#[command(name = "lat", version, about = "Local autoregressive translation toolkit")]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Seed for every random choice
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Local translation steps per position
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Flat `key = value` config file; flags override it
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Worker threads; 1 runs serially, 0 uses every core
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Train a model on a parallel corpus
    Train(TrainArgs),
    /// Translate a source file with a trained model
    Decode(DecodeArgs),
    /// Merge pieces read from a JSON Lines file
    Merge(MergeArgs),
    /// Score hypotheses against references
    Eval(EvalArgs),
    /// Time piece merging on synthetic input
    BenchMerge(BenchArgs),
}

#[derive(Debug, Args)]
pub struct TrainArgs {
    #[arg(long)]
    pub src: PathBuf,
    #[arg(long)]
    pub tgt: PathBuf,
    /// Where to write the vocabulary built from both sides
    #[arg(long)]
    pub vocab: PathBuf,
    /// Checkpoint path
    #[arg(long)]
    pub out: PathBuf,
    /// Loss trace (TSV); standard output when absent
    #[arg(long)]
    pub loss_log: Option<PathBuf>,
    #[arg(long)]
    pub steps: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DecodeArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,
    #[arg(long)]
    pub vocab: PathBuf,
    #[arg(long)]
    pub input: PathBuf,
    /// Standard output when absent
    #[arg(long)]
    pub output: Option<PathBuf>,
    #[arg(long)]
    pub iterations: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    pub length_offset: Option<i64>,
    /// Report mean per-sentence wall time and its split over stages (runs serially)
    #[arg(long)]
    pub latency: bool,
}

#[derive(Debug, Args)]
pub struct MergeArgs {
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    #[arg(long)]
    pub hyp: PathBuf,
    #[arg(long = "ref")]
    pub reference: PathBuf,
    /// Start distance within which a repeated n-gram counts; defaults to n
    #[arg(long)]
    pub nrr_window: Option<usize>,
}

#[derive(Debug, Args)]
pub struct BenchArgs {
    #[arg(long, value_delimiter = ',', default_value = "1000,2000,4000,8000")]
    pub ns: Vec<usize>,
    #[arg(long, value_delimiter = ',', default_value = "2,3,4,5,6")]
    pub ks: Vec<usize>,
    #[arg(long, default_value_t = 5)]
    pub reps: usize,
}

/// Defaults, then the config file, then flags.
pub fn resolve(cli: &Cli) -> Result<Settings> {
    let mut s = Settings::default();
    if let Some(path) = &cli.common.config {
        s.apply_file(path)?;
    }
    let c = &cli.common;
    if let Some(v) = c.seed {
        s.seed = v;
    }
    if let Some(v) = c.k {
        s.k = v;
    }
    if let Some(v) = c.threads {
        s.threads = v;
    }
    match &cli.command {
        Command::Train(a) => {
            if let Some(v) = a.steps {
                s.steps = v;
            }
        }
        Command::Decode(a) => {
            if let Some(v) = a.iterations {
                s.iterations = v;
            }
            if let Some(v) = a.length_offset {
                s.length_offset = v;
            }
        }
        Command::Eval(a) => {
            if a.nrr_window.is_some() {
                s.nrr_window = a.nrr_window;
            }
        }
        Command::Merge(_) | Command::BenchMerge(_) => {}
    }
    Ok(s)
}

pub fn run(cli: Cli) -> Result<()> {
    let settings = resolve(&cli)?;
    eprint!("# resolved config\n{}", settings.render());
    match &cli.command {
        Command::Train(a) => cmd_train(&settings, a),
        Command::Decode(a) => cmd_decode(&settings, a),
        Command::Merge(a) => cmd_merge(&settings, a),
        Command::Eval(a) => cmd_eval(&settings, a),
        Command::BenchMerge(a) => cmd_bench_merge(&settings, a),
    }
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    match path {
        Some(p) => io::write_text(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()).map_err(|e| Error::io("<stdout>", e)),
    }
}

fn lines_out(lines: &[String]) -> String {
    let mut s = String::new();
    for l in lines {
        s.push_str(l);
        s.push('\n');
    }
    s
}

pub fn cmd_train(s: &Settings, a: &TrainArgs) -> Result<()> {
    let (src, tgt) = io::read_parallel(&a.src, &a.tgt)?;
    let vocab = build_vocab(src.iter().chain(&tgt).map(String::as_str), s.min_count)?;
    let cfg = s.model_config(vocab.len());
    let mut pairs = Vec::with_capacity(src.len());
    for (i, (x, y)) in src.iter().zip(&tgt).enumerate() {
        let (x, y) = (vocab.encode_line(x), vocab.encode_line(y));
        if x.len() + 1 > cfg.max_len || y.len() > cfg.max_len {
            return Err(Error::Invalid(format!("line {}: sentence longer than max_len {} allows", i + 1, cfg.max_len)));
        }
        pairs.push((x, y));
    }
    let model = Model::new(cfg)?;
    log::info!("training {} parameters on {} pairs", model.num_params(), pairs.len());

    let mut trace = String::from("step\ttotal\ttoken\tlength\n");
    let report = train(model, &pairs, &s.train_config(), |step, l| {
        let _ = writeln!(trace, "{step}\t{:.6}\t{:.6}\t{:.6}", l.total, l.token, l.length);
    })?;
    io::save_model(&a.out, &report.model)?;
    io::write_vocab(&a.vocab, &vocab)?;
    emit(a.loss_log.as_deref(), &trace)
}

#[derive(Debug, Default)]
struct Clock {
    started: [Option<Instant>; 3],
    spent: [Duration; 3],
}

fn slot(stage: Stage) -> usize {
    match stage {
        Stage::Model => 0,
        Stage::Merge => 1,
        Stage::Adjust => 2,
    }
}

impl StageTimer for Clock {
    fn begin(&mut self, stage: Stage) {
        self.started[slot(stage)] = Some(Instant::now());
    }

    fn end(&mut self, stage: Stage) {
        if let Some(t0) = self.started[slot(stage)].take() {
            self.spent[slot(stage)] += t0.elapsed();
        }
    }
}

fn render(vocab: &Vocabulary, ids: &[TokenId]) -> Result<String> {
    Ok(vocab.decode_line(ids)?)
}

pub fn cmd_decode(s: &Settings, a: &DecodeArgs) -> Result<()> {
    let model = io::load_model(&a.checkpoint)?;
    let vocab = io::read_vocab(&a.vocab)?;
    let sources = io::read_lines(&a.input)?;
    if vocab.len() != model.config().vocab_size {
        return Err(Error::Invalid(format!(
            "vocabulary has {} entries but the checkpoint expects {}",
            vocab.len(),
            model.config().vocab_size
        )));
    }
    let k = model.config().k;
    if s.k != k {
        log::warn!("checkpoint was trained with K = {k}; ignoring k = {}", s.k);
    }
    let cfg = s.decode_config(k);

    let outputs: Vec<String> = if a.latency {
        let mut clock = Clock::default();
        let mut wall = Duration::ZERO;
        let mut out = Vec::with_capacity(sources.len());
        for line in &sources {
            let t0 = Instant::now();
            let ids = iterative_decode_with(&model, &vocab.encode_line(line), &cfg, &mut clock, |_| {})?;
            wall += t0.elapsed();
            out.push(render(&vocab, &ids)?);
        }
        let n = sources.len().max(1) as f64;
        let ms = |d: Duration| d.as_secs_f64() * 1e3 / n;
        let total = wall.as_secs_f64().max(1e-12);
        eprintln!("stage\tmean_ms\tshare");
        eprintln!("total\t{:.4}\t1.000", ms(wall));
        for (name, d) in ["model", "merge", "adjust"].iter().zip(clock.spent) {
            eprintln!("{name}\t{:.4}\t{:.3}", ms(d), d.as_secs_f64() / total);
        }
        out
    } else {
        s.pool().install(|| {
            sources
                .par_iter()
                .map(|line| render(&vocab, &iterative_decode(&model, &vocab.encode_line(line), &cfg)?))
                .collect::<Result<Vec<_>>>()
        })?
    };
    emit(a.output.as_deref(), &lines_out(&outputs))
}

pub fn cmd_merge(s: &Settings, a: &MergeArgs) -> Result<()> {
    let mut vocab = Vocabulary::from_tokens::<_, &str>([]);
    let sentences = io::read_pieces(&a.input, &mut vocab)?;
    let cfg = s.merge_config(s.k);
    let merged = s.pool().install(|| {
        sentences
            .par_iter()
            .enumerate()
            .map(|(i, pieces)| {
                if pieces.iter().all(|p| p.is_empty()) {
                    log::warn!("line {}: no pieces, writing an empty line", i + 1);
                    return Ok(String::new());
                }
                render(&vocab, &merge_all(pieces, &cfg)?.ids())
            })
            .collect::<Result<Vec<_>>>()
    })?;
    emit(a.output.as_deref(), &lines_out(&merged))
}

/// Per-metric rows of `cmd_eval`, as `(metric, value, count)`.
pub fn eval_rows(s: &Settings, hyps: &[String], refs: &[String]) -> Result<Vec<(String, Option<f64>, usize)>> {
    if hyps.len() != refs.len() {
        return Err(lat_core::Error::LengthMismatch { left: hyps.len(), right: refs.len() }.into());
    }
    let split = |lines: &[String]| -> Vec<Vec<String>> {
        lines.iter().map(|l| l.split_whitespace().map(str::to_owned).collect()).collect()
    };
    let (h, r) = (split(hyps), split(refs));
    let mut rows = vec![("bleu".to_owned(), Some(corpus_bleu(&h, &r, s.bleu_order)?), h.len())];
    for n in 1..=4 {
        let cfg = s.nrr_config(n);
        let grams = h.iter().map(|x| (x.len() + 1).saturating_sub(n)).sum();
        rows.push((format!("nrr{n}"), Some(ngram_repeat_rate(h.iter().map(Vec::as_slice), &cfg)), grams));
    }
    let pairs: Vec<(Vec<String>, Vec<String>)> = r.into_iter().zip(h).collect();
    for row in bucket_report(&pairs, &s.buckets, s.bleu_order) {
        let hi = row.hi.map_or(String::new(), |h| h.to_string());
        rows.push((format!("bleu_len[{},{hi})", row.lo), row.bleu, row.count));
    }
    Ok(rows)
}

pub fn cmd_eval(s: &Settings, a: &EvalArgs) -> Result<()> {
    let hyps = io::read_lines(&a.hyp)?;
    let refs = io::read_lines(&a.reference)?;
    let mut out = String::from("metric\tvalue\tcount\n");
    for (metric, value, count) in eval_rows(s, &hyps, &refs)? {
        let value = value.map_or("n/a".to_owned(), |v| format!("{v:.4}"));
        let _ = writeln!(out, "{metric}\t{value}\t{count}");
    }
    emit(None, &out)
}

pub fn cmd_bench_merge(s: &Settings, a: &BenchArgs) -> Result<()> {
    let mut out = String::from("k\tpieces\ttime_ms\tpieces_per_sec\n");
    for row in bench_merge(&a.ns, &a.ks, a.reps, s.seed) {
        let _ = writeln!(
            out,
            "{}\t{}\t{:.4}\t{:.0}",
            row.k,
            row.pieces,
            row.time.as_secs_f64() * 1e3,
            row.pieces_per_sec()
        );
    }
    emit(None, &out)
}
