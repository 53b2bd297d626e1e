//! Forward and backward passes.

use alloc::vec;
use alloc::vec::Vec;

use super::data::TrainExample;
use super::layout::{DecoderLayer, EncoderLayer};
use super::linalg::{
    add_into, matmul_acc, matmul_at_acc, matmul_bt_acc, sigmoid, softmax_masked, AttnCache, FfnCache, NormCache,
};
use super::Model;
use crate::vocab::{Piece, TokenId, EOS, LENGTH, MASK, PAD, SOP};
use crate::{Error, Result};

/// Row-major matrix of per-position vectors.
#[derive(Clone, Debug, PartialEq)]
pub struct Hidden {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Hidden {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }
}

/// Encoder output for one source sentence.
#[derive(Clone, Debug, PartialEq)]
pub struct Encoded {
    /// One state per encoder slot; row 0 is the length token.
    pub states: Hidden,
    /// Scores for target lengths `1..=max_len` (index `c` is length `c + 1`).
    pub length_logits: Vec<f64>,
}

/// Loss of a batch, split into its parts. Token sums are unweighted.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct LossBreakdown {
    /// Weighted token loss plus length loss, averaged over examples.
    pub total: f64,
    /// Weighted token loss, averaged over examples.
    pub token: f64,
    /// Length cross-entropy, averaged over examples.
    pub length: f64,
    /// Summed `-log p` of gold tokens whose target index was masked.
    pub masked_nll: f64,
    pub masked_count: usize,
    /// Summed `-log p` of the remaining gold tokens.
    pub unmasked_nll: f64,
    pub unmasked_count: usize,
}

impl LossBreakdown {
    pub fn masked_per_token(&self) -> f64 {
        if self.masked_count == 0 {
            0.0
        } else {
            self.masked_nll / self.masked_count as f64
        }
    }

    pub(crate) fn accumulate(&mut self, other: &LossBreakdown) {
        self.total += other.total;
        self.token += other.token;
        self.length += other.length;
        self.masked_nll += other.masked_nll;
        self.masked_count += other.masked_count;
        self.unmasked_nll += other.unmasked_nll;
        self.unmasked_count += other.unmasked_count;
    }
}

/// Ids the local head may emit. Inputs-only symbols are outside the support.
pub(crate) fn in_support(id: usize) -> bool {
    let id = id as TokenId;
    !(id == PAD || id == SOP || id == MASK || id == LENGTH)
}

struct EncLayerCache {
    x: Vec<f64>,
    attn: AttnCache,
    n1: NormCache,
    h1: Vec<f64>,
    ffn: FfnCache,
    n2: NormCache,
}

struct DecLayerCache {
    x: Vec<f64>,
    sa: AttnCache,
    n1: NormCache,
    h1: Vec<f64>,
    ca: AttnCache,
    n2: NormCache,
    h2: Vec<f64>,
    ffn: FfnCache,
    n3: NormCache,
}

struct StepCache {
    inputs: Vec<TokenId>,
    x: Vec<f64>,
    h_prev: Vec<f64>,
    c_prev: Vec<f64>,
    /// Activated gates, `n × 4d` in `i, f, g, o` order.
    gates: Vec<f64>,
    tanh_c: Vec<f64>,
    h: Vec<f64>,
    probs: Vec<f64>,
}

enum Feed<'a> {
    /// Gold tokens, `n × K`; step `j` reads gold `j - 1`.
    Teacher(&'a [TokenId]),
    /// Step `j` reads the argmax of step `j - 1`.
    Greedy,
}

struct HeadRun {
    steps: Vec<StepCache>,
    /// `n × K` emitted (greedy) or gold (teacher) tokens.
    tokens: Vec<TokenId>,
    /// `n × K` log-probabilities of `tokens`.
    logp: Vec<f64>,
}

impl Model {
    fn embed(&self, ids: &[TokenId]) -> Vec<f64> {
        let l = &self.layout;
        let p = &self.params;
        let d = self.config.d_model;
        let mut x = Vec::with_capacity(ids.len() * d);
        for (t, &id) in ids.iter().enumerate() {
            let tok = l.tok_emb.row(p, id as usize);
            let pos = l.pos_emb.row(p, t);
            x.extend(tok.iter().zip(pos).map(|(a, b)| a + b));
        }
        x
    }

    fn embed_backward(&self, g: &mut [f64], ids: &[TokenId], dx: &[f64]) {
        let l = &self.layout;
        let d = self.config.d_model;
        for (t, &id) in ids.iter().enumerate() {
            let row = &dx[t * d..(t + 1) * d];
            add_into(l.tok_emb.row_mut(g, id as usize), row);
            add_into(l.pos_emb.row_mut(g, t), row);
        }
    }

    fn check_vocab(&self, ids: &[TokenId]) -> Result<()> {
        match ids.iter().find(|&&id| id as usize >= self.config.vocab_size) {
            Some(&id) => Err(Error::IdOutOfRange(id)),
            None => Ok(()),
        }
    }

    fn encoder_layer(&self, layer: &EncoderLayer, x: Vec<f64>, n: usize) -> (Vec<f64>, EncLayerCache) {
        let p = &self.params;
        let (a, attn) = layer.attn.forward(p, &x, n, &x, n);
        let mut r1 = a;
        add_into(&mut r1, &x);
        let (h1, n1) = layer.ln1.forward(p, &r1, n);
        let (f, ffn) = layer.ffn.forward(p, &h1, n);
        let mut r2 = f;
        add_into(&mut r2, &h1);
        let (out, n2) = layer.ln2.forward(p, &r2, n);
        (out, EncLayerCache { x, attn, n1, h1, ffn, n2 })
    }

    fn encoder_layer_backward(
        &self,
        layer: &EncoderLayer,
        g: &mut [f64],
        c: &EncLayerCache,
        n: usize,
        dout: &[f64],
    ) -> Vec<f64> {
        let p = &self.params;
        let dr2 = layer.ln2.backward(p, g, &c.n2, n, dout);
        let mut dh1 = layer.ffn.backward(p, g, &c.h1, &c.ffn, n, &dr2);
        add_into(&mut dh1, &dr2);
        let dr1 = layer.ln1.backward(p, g, &c.n1, n, &dh1);
        let (dq, dkv) = layer.attn.backward(p, g, &c.attn, &c.x, n, &c.x, n, &dr1);
        let mut dx = dr1;
        add_into(&mut dx, &dq);
        add_into(&mut dx, &dkv);
        dx
    }

    fn decoder_layer(
        &self,
        layer: &DecoderLayer,
        x: Vec<f64>,
        n: usize,
        enc: &[f64],
        ne: usize,
    ) -> (Vec<f64>, DecLayerCache) {
        let p = &self.params;
        let (a, sa) = layer.self_attn.forward(p, &x, n, &x, n);
        let mut r1 = a;
        add_into(&mut r1, &x);
        let (h1, n1) = layer.ln1.forward(p, &r1, n);
        let (c, ca) = layer.cross_attn.forward(p, &h1, n, enc, ne);
        let mut r2 = c;
        add_into(&mut r2, &h1);
        let (h2, n2) = layer.ln2.forward(p, &r2, n);
        let (f, ffn) = layer.ffn.forward(p, &h2, n);
        let mut r3 = f;
        add_into(&mut r3, &h2);
        let (out, n3) = layer.ln3.forward(p, &r3, n);
        (out, DecLayerCache { x, sa, n1, h1, ca, n2, h2, ffn, n3 })
    }

    #[allow(clippy::too_many_arguments)]
    fn decoder_layer_backward(
        &self,
        layer: &DecoderLayer,
        g: &mut [f64],
        c: &DecLayerCache,
        n: usize,
        enc: &[f64],
        ne: usize,
        dout: &[f64],
        denc: &mut [f64],
    ) -> Vec<f64> {
        let p = &self.params;
        let dr3 = layer.ln3.backward(p, g, &c.n3, n, dout);
        let mut dh2 = layer.ffn.backward(p, g, &c.h2, &c.ffn, n, &dr3);
        add_into(&mut dh2, &dr3);
        let dr2 = layer.ln2.backward(p, g, &c.n2, n, &dh2);
        let (dq, dkv) = layer.cross_attn.backward(p, g, &c.ca, &c.h1, n, enc, ne, &dr2);
        add_into(denc, &dkv);
        let mut dh1 = dr2;
        add_into(&mut dh1, &dq);
        let dr1 = layer.ln1.backward(p, g, &c.n1, n, &dh1);
        let (dq, dkv) = layer.self_attn.backward(p, g, &c.sa, &c.x, n, &c.x, n, &dr1);
        let mut dx = dr1;
        add_into(&mut dx, &dq);
        add_into(&mut dx, &dkv);
        dx
    }

    fn encoder_ids(&self, source: &[TokenId]) -> Result<Vec<TokenId>> {
        if source.len() + 1 > self.config.max_len {
            return Err(Error::SourceTooLong { len: source.len() + 1, max: self.config.max_len });
        }
        self.check_vocab(source)?;
        let mut ids = Vec::with_capacity(source.len() + 1);
        ids.push(LENGTH);
        ids.extend_from_slice(source);
        Ok(ids)
    }

    fn encode_cached(&self, ids: &[TokenId]) -> (Vec<f64>, Vec<EncLayerCache>) {
        let n = ids.len();
        let mut x = self.embed(ids);
        let mut caches = Vec::with_capacity(self.layout.encoder.len());
        for layer in &self.layout.encoder {
            let (out, c) = self.encoder_layer(layer, x, n);
            caches.push(c);
            x = out;
        }
        (x, caches)
    }

    /// Runs the encoder over `⟨length⟩ + source`.
    pub fn encode(&self, source: &[TokenId]) -> Result<Encoded> {
        let ids = self.encoder_ids(source)?;
        let (states, _) = self.encode_cached(&ids);
        let d = self.config.d_model;
        let length_logits = self.layout.length.forward(&self.params, &states[..d], 1);
        Ok(Encoded { states: Hidden { rows: ids.len(), cols: d, data: states }, length_logits })
    }

    fn check_target(&self, input: &[TokenId]) -> Result<()> {
        if input.len() > self.config.max_len {
            return Err(Error::TargetTooLong { len: input.len(), max: self.config.max_len });
        }
        self.check_vocab(input)
    }

    fn decode_cached(&self, input: &[TokenId], enc: &Hidden) -> (Vec<f64>, Vec<DecLayerCache>) {
        let n = input.len();
        let mut x = self.embed(input);
        let mut caches = Vec::with_capacity(self.layout.decoder.len());
        for layer in &self.layout.decoder {
            let (out, c) = self.decoder_layer(layer, x, n, &enc.data, enc.rows);
            caches.push(c);
            x = out;
        }
        (x, caches)
    }

    /// Bidirectional decoder over the target input; one vector per position.
    pub fn decode_positions(&self, input: &[TokenId], enc: &Encoded) -> Result<Hidden> {
        self.check_target(input)?;
        let (data, _) = self.decode_cached(input, &enc.states);
        Ok(Hidden { rows: input.len(), cols: self.config.d_model, data })
    }

    fn head_forward(&self, pos: &[f64], n: usize, feed: Feed<'_>) -> HeadRun {
        let p = &self.params;
        let head = &self.layout.head;
        let (d, k, v) = (self.config.d_model, self.config.k, self.config.vocab_size);
        let mut h = pos.to_vec();
        let mut c = vec![0.0; n * d];
        let mut tokens = vec![PAD; n * k];
        let mut logp = vec![0.0; n * k];
        let mut steps = Vec::with_capacity(k);
        for j in 0..k {
            let inputs: Vec<TokenId> = (0..n)
                .map(|r| match (&feed, j) {
                    (_, 0) => SOP,
                    (Feed::Teacher(gold), _) => gold[r * k + j - 1],
                    (Feed::Greedy, _) => tokens[r * k + j - 1],
                })
                .collect();
            let mut x = Vec::with_capacity(n * d);
            for &id in &inputs {
                x.extend_from_slice(self.layout.tok_emb.row(p, id as usize));
            }
            let mut z = Vec::with_capacity(n * 4 * d);
            for _ in 0..n {
                z.extend_from_slice(head.b.of(p));
            }
            matmul_acc(&x, head.wx.of(p), &mut z, n, d, 4 * d);
            matmul_acc(&h, head.wh.of(p), &mut z, n, d, 4 * d);
            let mut gates = z;
            let mut c_new = vec![0.0; n * d];
            let mut tanh_c = vec![0.0; n * d];
            let mut h_new = vec![0.0; n * d];
            for r in 0..n {
                let gr = &mut gates[r * 4 * d..(r + 1) * 4 * d];
                for t in 0..d {
                    gr[t] = sigmoid(gr[t]);
                    gr[d + t] = sigmoid(gr[d + t]);
                    gr[2 * d + t] = libm::tanh(gr[2 * d + t]);
                    gr[3 * d + t] = sigmoid(gr[3 * d + t]);
                    let cv = gr[d + t] * c[r * d + t] + gr[t] * gr[2 * d + t];
                    c_new[r * d + t] = cv;
                    let tc = libm::tanh(cv);
                    tanh_c[r * d + t] = tc;
                    h_new[r * d + t] = gr[3 * d + t] * tc;
                }
            }
            let logits = head.out.forward(p, &h_new, n);
            let mut probs = vec![0.0; n * v];
            for r in 0..n {
                let lr = &logits[r * v..(r + 1) * v];
                let lognorm = softmax_masked(lr, in_support, &mut probs[r * v..(r + 1) * v]);
                let tok = match feed {
                    Feed::Teacher(gold) => gold[r * k + j],
                    Feed::Greedy => argmax_support(lr),
                };
                tokens[r * k + j] = tok;
                logp[r * k + j] = if in_support(tok as usize) { lr[tok as usize] - lognorm } else { f64::NEG_INFINITY };
            }
            steps.push(StepCache {
                inputs,
                x,
                h_prev: core::mem::replace(&mut h, h_new.clone()),
                c_prev: core::mem::replace(&mut c, c_new),
                gates,
                tanh_c,
                h: h_new,
                probs,
            });
        }
        HeadRun { steps, tokens, logp }
    }

    /// Backpropagates `dlogits` (`K` blocks of `n × V`) through the head; returns `d pos`.
    fn head_backward(&self, g: &mut [f64], run: &HeadRun, n: usize, dlogits: &[Vec<f64>]) -> Vec<f64> {
        let p = &self.params;
        let head = &self.layout.head;
        let d = self.config.d_model;
        let mut dh = vec![0.0; n * d];
        let mut dc = vec![0.0; n * d];
        for (j, step) in run.steps.iter().enumerate().rev() {
            let dh_out = head.out.backward(p, g, &step.h, n, &dlogits[j]);
            add_into(&mut dh, &dh_out);
            let mut dz = vec![0.0; n * 4 * d];
            for r in 0..n {
                let gr = &step.gates[r * 4 * d..(r + 1) * 4 * d];
                let dzr = &mut dz[r * 4 * d..(r + 1) * 4 * d];
                for t in 0..d {
                    let (i, f, gg, o) = (gr[t], gr[d + t], gr[2 * d + t], gr[3 * d + t]);
                    let idx = r * d + t;
                    let tc = step.tanh_c[idx];
                    let dho = dh[idx];
                    let dcv = dc[idx] + dho * o * (1.0 - tc * tc);
                    dzr[t] = dcv * gg * i * (1.0 - i);
                    dzr[d + t] = dcv * step.c_prev[idx] * f * (1.0 - f);
                    dzr[2 * d + t] = dcv * i * (1.0 - gg * gg);
                    dzr[3 * d + t] = dho * tc * o * (1.0 - o);
                    dc[idx] = dcv * f;
                }
            }
            matmul_at_acc(&step.x, &dz, head.wx.of_mut(g), n, d, 4 * d);
            matmul_at_acc(&step.h_prev, &dz, head.wh.of_mut(g), n, d, 4 * d);
            {
                let db = head.b.of_mut(g);
                for r in 0..n {
                    add_into(db, &dz[r * 4 * d..(r + 1) * 4 * d]);
                }
            }
            let mut dx = vec![0.0; n * d];
            matmul_bt_acc(&dz, head.wx.of(p), &mut dx, n, d, 4 * d);
            for (r, &id) in step.inputs.iter().enumerate() {
                add_into(self.layout.tok_emb.row_mut(g, id as usize), &dx[r * d..(r + 1) * d]);
            }
            let mut dh_prev = vec![0.0; n * d];
            matmul_bt_acc(&dz, head.wh.of(p), &mut dh_prev, n, d, 4 * d);
            dh = dh_prev;
        }
        dh
    }

    /// Greedy pieces for every row of `pos`, truncated at the first terminator.
    pub fn generate_pieces(&self, pos: &Hidden) -> Vec<Piece> {
        let k = self.config.k;
        let run = self.head_forward(&pos.data, pos.rows, Feed::Greedy);
        (0..pos.rows)
            .map(|r| {
                let out: Vec<(TokenId, f64)> = (0..k)
                    .map(|j| (run.tokens[r * k + j], run.logp[r * k + j]))
                    .take_while(|&(t, _)| t != EOS && t != PAD)
                    .collect();
                Piece::from_scored(r, &out)
            })
            .collect()
    }

    /// Greedy local translation from one decoder vector.
    pub fn local_translate_greedy(&self, pos: &[f64], anchor: usize) -> Piece {
        let hidden = Hidden { rows: 1, cols: pos.len(), data: pos.to_vec() };
        let mut piece = self.generate_pieces(&hidden).pop().expect("one row");
        for (j, t) in piece.tokens.iter_mut().enumerate() {
            t.position.sum = (anchor + j) as i64;
        }
        piece.anchor = anchor;
        piece
    }

    /// Teacher-forced log-probabilities of `gold` (length `K`).
    pub fn local_translate_teacher(&self, pos: &[f64], gold: &[TokenId]) -> Vec<f64> {
        assert_eq!(gold.len(), self.config.k, "gold piece must have K tokens");
        self.head_forward(pos, 1, Feed::Teacher(gold)).logp
    }

    /// Softmax of the local head at every step under teacher forcing.
    pub fn local_step_distributions(&self, pos: &[f64], gold: &[TokenId]) -> Vec<Vec<f64>> {
        let run = self.head_forward(pos, 1, Feed::Teacher(gold));
        run.steps.into_iter().map(|s| s.probs).collect()
    }

    /// Loss of one example scaled by `scale`; gradients go to `grads` when given.
    pub(crate) fn example_loss(
        &self,
        ex: &TrainExample,
        alpha: f64,
        scale: f64,
        grads: Option<&mut [f64]>,
    ) -> Result<LossBreakdown> {
        let cfg = &self.config;
        let (d, k, v, m) = (cfg.d_model, cfg.k, cfg.vocab_size, cfg.max_len);
        let n_len = ex.target_len();
        if n_len == 0 || n_len > m {
            return Err(Error::TargetTooLong { len: n_len, max: m });
        }
        self.check_target(&ex.input)?;
        self.check_vocab(&ex.target)?;
        let enc_ids = self.encoder_ids(&ex.source)?;
        let ne = enc_ids.len();
        let (enc, enc_caches) = self.encode_cached(&enc_ids);

        let len_logits = self.layout.length.forward(&self.params, &enc[..d], 1);
        let mut len_probs = vec![0.0; m];
        let lognorm = softmax_masked(&len_logits, |_| true, &mut len_probs);
        let length_nll = lognorm - len_logits[n_len - 1];

        let n = ex.input.len();
        let enc_hidden = Hidden { rows: ne, cols: d, data: enc };
        let (pos, dec_caches) = self.decode_cached(&ex.input, &enc_hidden);
        let run = self.head_forward(&pos, n, Feed::Teacher(&ex.gold));

        let mut out = LossBreakdown::default();
        let mut token_loss = 0.0;
        let mut dlogits: Vec<Vec<f64>> = (0..k).map(|_| vec![0.0; n * v]).collect();
        for r in 0..n {
            for j in 0..k {
                let idx = r * k + j;
                let gold = ex.gold[idx];
                if gold == PAD {
                    continue;
                }
                let nll = -run.logp[idx];
                let w = if ex.gold_masked[idx] {
                    out.masked_nll += nll;
                    out.masked_count += 1;
                    1.0
                } else {
                    out.unmasked_nll += nll;
                    out.unmasked_count += 1;
                    alpha
                };
                token_loss += w * nll;
                if w != 0.0 {
                    let probs = &run.steps[j].probs[r * v..(r + 1) * v];
                    let dl = &mut dlogits[j][r * v..(r + 1) * v];
                    for (o, &pr) in dl.iter_mut().zip(probs) {
                        *o = w * scale * pr;
                    }
                    dl[gold as usize] -= w * scale;
                }
            }
        }
        out.token = scale * token_loss;
        out.length = scale * length_nll;
        out.total = out.token + out.length;
        if !out.total.is_finite() {
            return Err(Error::NumericalDivergence);
        }

        let Some(g) = grads else { return Ok(out) };
        let dpos = self.head_backward(g, &run, n, &dlogits);
        let mut denc = vec![0.0; ne * d];
        let mut dx = dpos;
        for (layer, c) in self.layout.decoder.iter().zip(&dec_caches).rev() {
            dx = self.decoder_layer_backward(layer, g, c, n, &enc_hidden.data, ne, &dx, &mut denc);
        }
        self.embed_backward(g, &ex.input, &dx);

        let dlen: Vec<f64> = len_probs
            .iter()
            .enumerate()
            .map(|(c, &pr)| scale * (pr - if c == n_len - 1 { 1.0 } else { 0.0 }))
            .collect();
        let dstate = self.layout.length.backward(&self.params, g, &enc_hidden.data[..d], 1, &dlen);
        add_into(&mut denc[..d], &dstate);
        let mut dx = denc;
        for (layer, c) in self.layout.encoder.iter().zip(&enc_caches).rev() {
            dx = self.encoder_layer_backward(layer, g, c, ne, &dx);
        }
        self.embed_backward(g, &enc_ids, &dx);
        Ok(out)
    }
}

/// Highest-scoring id in the support; ties go to the smaller id.
fn argmax_support(logits: &[f64]) -> TokenId {
    let mut best = EOS;
    let mut best_v = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if in_support(i) && l > best_v {
            best_v = l;
            best = i as TokenId;
        }
    }
    best
}
