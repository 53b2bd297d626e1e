//! Dense row-major kernels and layer primitives with hand-written backward passes.
//!
//! Parameters live in one flat `&[f64]`; each layer knows the [`Slot`]s it
//! reads. Backward functions accumulate into a gradient buffer laid out the
//! same way.

use alloc::vec;
use alloc::vec::Vec;

use super::layout::Slot;

/// `y[n×out] += x[n×inp] · w[inp×out]`
pub(crate) fn matmul_acc(x: &[f64], w: &[f64], y: &mut [f64], n: usize, inp: usize, out: usize) {
    debug_assert_eq!(x.len(), n * inp);
    debug_assert_eq!(w.len(), inp * out);
    for r in 0..n {
        let yr = &mut y[r * out..(r + 1) * out];
        for (k, &a) in x[r * inp..(r + 1) * inp].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let wk = &w[k * out..(k + 1) * out];
            for (yv, &wv) in yr.iter_mut().zip(wk) {
                *yv += a * wv;
            }
        }
    }
}

/// `dx[n×inp] += dy[n×out] · w[inp×out]ᵀ`
pub(crate) fn matmul_bt_acc(dy: &[f64], w: &[f64], dx: &mut [f64], n: usize, inp: usize, out: usize) {
    for r in 0..n {
        let dyr = &dy[r * out..(r + 1) * out];
        for k in 0..inp {
            let wk = &w[k * out..(k + 1) * out];
            dx[r * inp + k] += dot(dyr, wk);
        }
    }
}

/// `dw[inp×out] += x[n×inp]ᵀ · dy[n×out]`
pub(crate) fn matmul_at_acc(x: &[f64], dy: &[f64], dw: &mut [f64], n: usize, inp: usize, out: usize) {
    for r in 0..n {
        let dyr = &dy[r * out..(r + 1) * out];
        for (k, &a) in x[r * inp..(r + 1) * inp].iter().enumerate() {
            if a == 0.0 {
                continue;
            }
            let dwk = &mut dw[k * out..(k + 1) * out];
            for (g, &d) in dwk.iter_mut().zip(dyr) {
                *g += a * d;
            }
        }
    }
}

#[inline]
pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn add_into(dst: &mut [f64], src: &[f64]) {
    for (d, s) in dst.iter_mut().zip(src) {
        *d += s;
    }
}

pub(crate) fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + libm::exp(-x))
}

/// Softmax over `logits` restricted to `allowed`; disallowed entries get 0.
/// Returns the log-normaliser.
pub(crate) fn softmax_masked(logits: &[f64], allowed: impl Fn(usize) -> bool, probs: &mut [f64]) -> f64 {
    let mut max = f64::NEG_INFINITY;
    for (i, &l) in logits.iter().enumerate() {
        if allowed(i) && l > max {
            max = l;
        }
    }
    let mut sum = 0.0;
    for (i, (&l, p)) in logits.iter().zip(probs.iter_mut()).enumerate() {
        *p = if allowed(i) { libm::exp(l - max) } else { 0.0 };
        sum += *p;
    }
    for p in probs.iter_mut() {
        *p /= sum;
    }
    max + libm::log(sum)
}

/// Affine map `x·W + b`.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Linear {
    pub w: Slot,
    pub b: Slot,
}

impl Linear {
    pub fn inp(&self) -> usize {
        self.w.rows
    }

    pub fn out(&self) -> usize {
        self.w.cols
    }

    pub fn forward(&self, p: &[f64], x: &[f64], n: usize) -> Vec<f64> {
        let out = self.out();
        let bias = self.b.of(p);
        let mut y = Vec::with_capacity(n * out);
        for _ in 0..n {
            y.extend_from_slice(bias);
        }
        matmul_acc(x, self.w.of(p), &mut y, n, self.inp(), out);
        y
    }

    /// Accumulates weight/bias gradients and returns `dx`.
    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], n: usize, dy: &[f64]) -> Vec<f64> {
        let (inp, out) = (self.inp(), self.out());
        matmul_at_acc(x, dy, self.w.of_mut(g), n, inp, out);
        let db = self.b.of_mut(g);
        for r in 0..n {
            add_into(db, &dy[r * out..(r + 1) * out]);
        }
        let mut dx = vec![0.0; n * inp];
        matmul_bt_acc(dy, self.w.of(p), &mut dx, n, inp, out);
        dx
    }
}

pub(crate) const LN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug)]
pub(crate) struct LayerNorm {
    pub gain: Slot,
    pub bias: Slot,
}

pub(crate) struct NormCache {
    xhat: Vec<f64>,
    inv_std: Vec<f64>,
}

impl LayerNorm {
    pub fn forward(&self, p: &[f64], x: &[f64], n: usize) -> (Vec<f64>, NormCache) {
        let d = self.gain.len();
        let (gain, bias) = (self.gain.of(p), self.bias.of(p));
        let mut y = vec![0.0; n * d];
        let mut xhat = vec![0.0; n * d];
        let mut inv_std = vec![0.0; n];
        for r in 0..n {
            let row = &x[r * d..(r + 1) * d];
            let mean = row.iter().sum::<f64>() / d as f64;
            let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / d as f64;
            let is = 1.0 / libm::sqrt(var + LN_EPS);
            inv_std[r] = is;
            for c in 0..d {
                let h = (row[c] - mean) * is;
                xhat[r * d + c] = h;
                y[r * d + c] = gain[c] * h + bias[c];
            }
        }
        (y, NormCache { xhat, inv_std })
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], cache: &NormCache, n: usize, dy: &[f64]) -> Vec<f64> {
        let d = self.gain.len();
        let gain = self.gain.of(p);
        let mut dx = vec![0.0; n * d];
        {
            let dgain = self.gain.of_mut(g);
            for r in 0..n {
                for c in 0..d {
                    dgain[c] += dy[r * d + c] * cache.xhat[r * d + c];
                }
            }
        }
        {
            let dbias = self.bias.of_mut(g);
            for r in 0..n {
                add_into(dbias, &dy[r * d..(r + 1) * d]);
            }
        }
        let mut dxhat = vec![0.0; d];
        for r in 0..n {
            let xh = &cache.xhat[r * d..(r + 1) * d];
            for c in 0..d {
                dxhat[c] = dy[r * d + c] * gain[c];
            }
            let mean_d = dxhat.iter().sum::<f64>() / d as f64;
            let mean_dx = dot(&dxhat, xh) / d as f64;
            for c in 0..d {
                dx[r * d + c] = cache.inv_std[r] * (dxhat[c] - mean_d - xh[c] * mean_dx);
            }
        }
        dx
    }
}

const GELU_C: f64 = 0.797_884_560_802_865_4; // sqrt(2/pi)
const GELU_A: f64 = 0.044_715;

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + libm::tanh(GELU_C * (x + GELU_A * x * x * x)))
}

fn gelu_grad(x: f64) -> f64 {
    let t = libm::tanh(GELU_C * (x + GELU_A * x * x * x));
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * GELU_C * (1.0 + 3.0 * GELU_A * x * x)
}

/// Position-wise feed-forward block with a tanh-approximated GELU.
#[derive(Clone, Copy, Debug)]
pub(crate) struct FeedForward {
    pub up: Linear,
    pub down: Linear,
}

pub(crate) struct FfnCache {
    pre: Vec<f64>,
    act: Vec<f64>,
}

impl FeedForward {
    pub fn forward(&self, p: &[f64], x: &[f64], n: usize) -> (Vec<f64>, FfnCache) {
        let pre = self.up.forward(p, x, n);
        let act: Vec<f64> = pre.iter().map(|&v| gelu(v)).collect();
        let y = self.down.forward(p, &act, n);
        (y, FfnCache { pre, act })
    }

    pub fn backward(&self, p: &[f64], g: &mut [f64], x: &[f64], cache: &FfnCache, n: usize, dy: &[f64]) -> Vec<f64> {
        let mut dact = self.down.backward(p, g, &cache.act, n, dy);
        for (d, &v) in dact.iter_mut().zip(&cache.pre) {
            *d *= gelu_grad(v);
        }
        self.up.backward(p, g, x, n, &dact)
    }
}

/// Multi-head scaled dot-product attention without masking.
#[derive(Clone, Copy, Debug)]
pub(crate) struct Attention {
    pub q: Linear,
    pub k: Linear,
    pub v: Linear,
    pub o: Linear,
    pub heads: usize,
}

pub(crate) struct AttnCache {
    q: Vec<f64>,
    k: Vec<f64>,
    v: Vec<f64>,
    /// `heads × nq × nk`
    probs: Vec<f64>,
    ctx: Vec<f64>,
}

impl Attention {
    fn dims(&self) -> (usize, usize) {
        let d = self.q.out();
        (d, d / self.heads)
    }

    pub fn forward(&self, p: &[f64], xq: &[f64], nq: usize, xkv: &[f64], nk: usize) -> (Vec<f64>, AttnCache) {
        let (d, dh) = self.dims();
        let scale = 1.0 / libm::sqrt(dh as f64);
        let q = self.q.forward(p, xq, nq);
        let k = self.k.forward(p, xkv, nk);
        let v = self.v.forward(p, xkv, nk);
        let mut probs = vec![0.0; self.heads * nq * nk];
        let mut ctx = vec![0.0; nq * d];
        let mut scores = vec![0.0; nk];
        for h in 0..self.heads {
            let off = h * dh;
            for a in 0..nq {
                let qa = &q[a * d + off..a * d + off + dh];
                for (b, s) in scores.iter_mut().enumerate() {
                    *s = dot(qa, &k[b * d + off..b * d + off + dh]) * scale;
                }
                let row = &mut probs[(h * nq + a) * nk..(h * nq + a + 1) * nk];
                softmax_masked(&scores, |_| true, row);
                let out = &mut ctx[a * d + off..a * d + off + dh];
                for (b, &pb) in row.iter().enumerate() {
                    for (o, &vv) in out.iter_mut().zip(&v[b * d + off..b * d + off + dh]) {
                        *o += pb * vv;
                    }
                }
            }
        }
        let y = self.o.forward(p, &ctx, nq);
        (y, AttnCache { q, k, v, probs, ctx })
    }

    /// Returns `(dxq, dxkv)`.
    pub fn backward(
        &self,
        p: &[f64],
        g: &mut [f64],
        c: &AttnCache,
        xq: &[f64],
        nq: usize,
        xkv: &[f64],
        nk: usize,
        dy: &[f64],
    ) -> (Vec<f64>, Vec<f64>) {
        let (d, dh) = self.dims();
        let scale = 1.0 / libm::sqrt(dh as f64);
        let dctx = self.o.backward(p, g, &c.ctx, nq, dy);
        let mut dq = vec![0.0; nq * d];
        let mut dk = vec![0.0; nk * d];
        let mut dv = vec![0.0; nk * d];
        let mut dp = vec![0.0; nk];
        for h in 0..self.heads {
            let off = h * dh;
            for a in 0..nq {
                let row = &c.probs[(h * nq + a) * nk..(h * nq + a + 1) * nk];
                let dca = &dctx[a * d + off..a * d + off + dh];
                for b in 0..nk {
                    dp[b] = dot(dca, &c.v[b * d + off..b * d + off + dh]);
                    for (x, &y) in dv[b * d + off..b * d + off + dh].iter_mut().zip(dca) {
                        *x += row[b] * y;
                    }
                }
                let inner = dot(&dp, row);
                for b in 0..nk {
                    let ds = row[b] * (dp[b] - inner) * scale;
                    if ds == 0.0 {
                        continue;
                    }
                    for t in 0..dh {
                        dq[a * d + off + t] += ds * c.k[b * d + off + t];
                        dk[b * d + off + t] += ds * c.q[a * d + off + t];
                    }
                }
            }
        }
        let dxq = self.q.backward(p, g, xq, nq, &dq);
        let mut dxkv = self.k.backward(p, g, xkv, nk, &dk);
        add_into(&mut dxkv, &self.v.backward(p, g, xkv, nk, &dv));
        (dxq, dxkv)
    }
}
