//! Cells, attention, head, and exact gradients.
//!
//! LSTM (gate order i, f, g, o):
//! ```text
//! pre = W_x x_t + W_h h_{t-1} + b
//! i = σ(pre_i)   f = σ(pre_f)   g = tanh(pre_g)   o = σ(pre_o)
//! c_t = f ⊙ c_{t-1} + i ⊙ g
//! h_t = o ⊙ tanh(c_t)
//! ```
//!
//! GRU (gate order z, r, g):
//! ```text
//! z = σ(W_z x_t + U_z h_{t-1} + b_z)
//! r = σ(W_r x_t + U_r h_{t-1} + b_r)
//! g = tanh(W_g x_t + U_g (r ⊙ h_{t-1}) + b_g)
//! h_t = z ⊙ h_{t-1} + (1 - z) ⊙ g
//! ```
//!
//! Additive attention over hidden states:
//! ```text
//! s_i = uᵀ tanh(W_a h_i + b_a)     α = softmax(s)     v = Σ α_i h_i
//! logits = W_o v + b_o             p = softmax(logits)
//! ```
//!
//! Initial states are zero. Parameters initialize uniform(-0.08, 0.08) with
//! the LSTM forget-gate bias at 1.0.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{Checkpoint, CheckpointTensor};
use crate::error::{Error, Result};

const CHECKPOINT_KIND: &str = "attention_rnn";
const INIT_RANGE: f64 = 0.08;
const LSTM_FORGET_BIAS: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RnnCellKind {
    Lstm,
    Gru,
}

impl RnnCellKind {
    fn n_gates(self) -> usize {
        match self {
            RnnCellKind::Lstm => 4,
            RnnCellKind::Gru => 3,
        }
    }

    fn discriminant(self) -> i64 {
        match self {
            RnnCellKind::Lstm => 0,
            RnnCellKind::Gru => 1,
        }
    }

    fn from_discriminant(v: i64) -> Result<Self> {
        match v {
            0 => Ok(RnnCellKind::Lstm),
            1 => Ok(RnnCellKind::Gru),
            other => Err(Error::Data(format!("unknown cell kind {other}"))),
        }
    }
}

impl std::fmt::Display for RnnCellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            RnnCellKind::Lstm => write!(f, "lstm"),
            RnnCellKind::Gru => write!(f, "gru"),
        }
    }
}

/// Public forward-pass record: hidden states, attention weights, pooled
/// vector, logits and the positive-class probability.
#[derive(Debug, Clone, PartialEq)]
pub struct ForwardTrace {
    pub hidden: Vec<Vec<f64>>,
    pub attention: Vec<f64>,
    pub pooled: Vec<f64>,
    pub logits: [f64; 2],
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionRnnModel {
    pub kind: RnnCellKind,
    pub input_dim: usize,
    pub hidden: usize,
    pub seed: u64,
    pub(crate) params: Vec<f64>,
}

struct Layout {
    w_x: usize,
    w_h: usize,
    b: usize,
    w_a: usize,
    b_a: usize,
    u: usize,
    w_o: usize,
    b_o: usize,
    total: usize,
}

fn layout(kind: RnnCellKind, input_dim: usize, hidden: usize) -> Layout {
    let g = kind.n_gates();
    let w_x = 0;
    let w_h = w_x + g * hidden * input_dim;
    let b = w_h + g * hidden * hidden;
    let w_a = b + g * hidden;
    let b_a = w_a + hidden * hidden;
    let u = b_a + hidden;
    let w_o = u + hidden;
    let b_o = w_o + 2 * hidden;
    Layout {
        w_x,
        w_h,
        b,
        w_a,
        b_a,
        u,
        w_o,
        b_o,
        total: b_o + 2,
    }
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

/// Per-timestep cache for backpropagation.
enum StepCache {
    Lstm {
        x: Vec<f64>,
        h_prev: Vec<f64>,
        c_prev: Vec<f64>,
        i: Vec<f64>,
        f: Vec<f64>,
        g: Vec<f64>,
        o: Vec<f64>,
        tanh_c: Vec<f64>,
        h: Vec<f64>,
    },
    Gru {
        x: Vec<f64>,
        h_prev: Vec<f64>,
        z: Vec<f64>,
        r: Vec<f64>,
        a: Vec<f64>,
        g: Vec<f64>,
        h: Vec<f64>,
    },
}

impl StepCache {
    fn h(&self) -> &[f64] {
        match self {
            StepCache::Lstm { h, .. } | StepCache::Gru { h, .. } => h,
        }
    }
}

struct FullTrace {
    steps: Vec<StepCache>,
    /// tanh(W_a h_i + b_a) per step.
    att_tanh: Vec<Vec<f64>>,
    alpha: Vec<f64>,
    pooled: Vec<f64>,
    logits: [f64; 2],
    probs: [f64; 2],
}

impl AttentionRnnModel {
    pub fn init(kind: RnnCellKind, input_dim: usize, hidden: usize, seed: u64) -> Result<Self> {
        if input_dim == 0 || hidden == 0 {
            return Err(Error::Config("input_dim and hidden must be >= 1".into()));
        }
        let l = layout(kind, input_dim, hidden);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut params: Vec<f64> = (0..l.total)
            .map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
            .collect();
        if kind == RnnCellKind::Lstm {
            // Forget-gate bias starts open.
            for v in params[l.b + hidden..l.b + 2 * hidden].iter_mut() {
                *v = LSTM_FORGET_BIAS;
            }
        }
        Ok(AttentionRnnModel {
            kind,
            input_dim,
            hidden,
            seed,
            params,
        })
    }

    pub fn n_params(&self) -> usize {
        self.params.len()
    }

    pub fn params(&self) -> &[f64] {
        &self.params
    }

    pub fn params_mut(&mut self) -> &mut [f64] {
        &mut self.params
    }

    fn layout(&self) -> Layout {
        layout(self.kind, self.input_dim, self.hidden)
    }

    /// Name of the tensor owning a flat parameter index.
    pub fn tensor_name(&self, flat_index: usize) -> &'static str {
        let l = self.layout();
        if flat_index < l.w_h {
            "w_x"
        } else if flat_index < l.b {
            "w_h"
        } else if flat_index < l.w_a {
            "b"
        } else if flat_index < l.b_a {
            "w_a"
        } else if flat_index < l.u {
            "b_a"
        } else if flat_index < l.w_o {
            "u"
        } else if flat_index < l.b_o {
            "w_o"
        } else {
            "b_o"
        }
    }

    fn check_sequence(&self, sequence: &[Vec<f64>]) -> Result<()> {
        if sequence.is_empty() {
            return Err(Error::Data("cannot run the RNN on a zero-length sequence".into()));
        }
        for (t, row) in sequence.iter().enumerate() {
            if row.len() != self.input_dim {
                return Err(Error::Data(format!(
                    "sequence row {t} has dimension {}, model expects {}",
                    row.len(),
                    self.input_dim
                )));
            }
        }
        Ok(())
    }

    fn step(&self, x: &[f64], h_prev: &[f64], c_prev: &[f64]) -> StepCache {
        let hd = self.hidden;
        let l = self.layout();
        let g_count = self.kind.n_gates();
        // pre[r] = b[r] + W_x[r,:] x + W_h[r,:] h_prev  (GRU handles the
        // candidate gate's recurrent term separately below).
        let mut pre = vec![0.0; g_count * hd];
        for r in 0..g_count * hd {
            let mut acc = self.params[l.b + r];
            let wx = l.w_x + r * self.input_dim;
            for (d, &xd) in x.iter().enumerate() {
                acc += self.params[wx + d] * xd;
            }
            pre[r] = acc;
        }
        match self.kind {
            RnnCellKind::Lstm => {
                for r in 0..4 * hd {
                    let wh = l.w_h + r * hd;
                    let mut acc = 0.0;
                    for (j, &hj) in h_prev.iter().enumerate() {
                        acc += self.params[wh + j] * hj;
                    }
                    pre[r] += acc;
                }
                let mut i = vec![0.0; hd];
                let mut f = vec![0.0; hd];
                let mut g = vec![0.0; hd];
                let mut o = vec![0.0; hd];
                for k in 0..hd {
                    i[k] = sigmoid(pre[k]);
                    f[k] = sigmoid(pre[hd + k]);
                    g[k] = pre[2 * hd + k].tanh();
                    o[k] = sigmoid(pre[3 * hd + k]);
                }
                let mut c = vec![0.0; hd];
                let mut tanh_c = vec![0.0; hd];
                let mut h = vec![0.0; hd];
                for k in 0..hd {
                    c[k] = f[k] * c_prev[k] + i[k] * g[k];
                    tanh_c[k] = c[k].tanh();
                    h[k] = o[k] * tanh_c[k];
                }
                StepCache::Lstm {
                    x: x.to_vec(),
                    h_prev: h_prev.to_vec(),
                    c_prev: c_prev.to_vec(),
                    i,
                    f,
                    g,
                    o,
                    tanh_c: tanh_c.clone(),
                    h,
                }
            }
            RnnCellKind::Gru => {
                // Recurrent terms for z and r use h_prev.
                for r in 0..2 * hd {
                    let wh = l.w_h + r * hd;
                    let mut acc = 0.0;
                    for (j, &hj) in h_prev.iter().enumerate() {
                        acc += self.params[wh + j] * hj;
                    }
                    pre[r] += acc;
                }
                let mut z = vec![0.0; hd];
                let mut r_gate = vec![0.0; hd];
                for k in 0..hd {
                    z[k] = sigmoid(pre[k]);
                    r_gate[k] = sigmoid(pre[hd + k]);
                }
                let a: Vec<f64> = (0..hd).map(|k| r_gate[k] * h_prev[k]).collect();
                // Candidate gate's recurrent term uses a = r ⊙ h_prev.
                for rr in 0..hd {
                    let wh = l.w_h + (2 * hd + rr) * hd;
                    let mut acc = 0.0;
                    for (j, &aj) in a.iter().enumerate() {
                        acc += self.params[wh + j] * aj;
                    }
                    pre[2 * hd + rr] += acc;
                }
                let g: Vec<f64> = (0..hd).map(|k| pre[2 * hd + k].tanh()).collect();
                let h: Vec<f64> = (0..hd)
                    .map(|k| z[k] * h_prev[k] + (1.0 - z[k]) * g[k])
                    .collect();
                StepCache::Gru {
                    x: x.to_vec(),
                    h_prev: h_prev.to_vec(),
                    z,
                    r: r_gate,
                    a,
                    g,
                    h,
                }
            }
        }
    }

    fn full_forward(&self, sequence: &[Vec<f64>]) -> Result<FullTrace> {
        self.check_sequence(sequence)?;
        let hd = self.hidden;
        let l = self.layout();
        let mut steps = Vec::with_capacity(sequence.len());
        let mut h = vec![0.0; hd];
        let mut c = vec![0.0; hd];
        for x in sequence {
            let cache = self.step(x, &h, &c);
            h = cache.h().to_vec();
            if let StepCache::Lstm {
                f, c_prev, i, g, ..
            } = &cache
            {
                for k in 0..hd {
                    c[k] = f[k] * c_prev[k] + i[k] * g[k];
                }
            }
            steps.push(cache);
        }

        // Additive attention.
        let n = steps.len();
        let mut att_tanh = Vec::with_capacity(n);
        let mut scores = Vec::with_capacity(n);
        for step in &steps {
            let hi = step.h();
            let mut t = vec![0.0; hd];
            for r in 0..hd {
                let mut acc = self.params[l.b_a + r];
                let wa = l.w_a + r * hd;
                for (j, &hj) in hi.iter().enumerate() {
                    acc += self.params[wa + j] * hj;
                }
                t[r] = acc.tanh();
            }
            let mut s = 0.0;
            for (r, &tr) in t.iter().enumerate() {
                s += self.params[l.u + r] * tr;
            }
            att_tanh.push(t);
            scores.push(s);
        }
        let max_s = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let exps: Vec<f64> = scores.iter().map(|&s| (s - max_s).exp()).collect();
        let z: f64 = exps.iter().sum();
        let alpha: Vec<f64> = exps.iter().map(|&e| e / z).collect();

        let mut pooled = vec![0.0; hd];
        for (i, step) in steps.iter().enumerate() {
            for (p, &hj) in pooled.iter_mut().zip(step.h()) {
                *p += alpha[i] * hj;
            }
        }

        let mut logits = [self.params[l.b_o], self.params[l.b_o + 1]];
        for (j, &vj) in pooled.iter().enumerate() {
            logits[0] += self.params[l.w_o + j] * vj;
            logits[1] += self.params[l.w_o + hd + j] * vj;
        }
        if !logits[0].is_finite() || !logits[1].is_finite() {
            return Err(Error::Numeric("non-finite logits in forward pass".into()));
        }
        let m = logits[0].max(logits[1]);
        let e0 = (logits[0] - m).exp();
        let e1 = (logits[1] - m).exp();
        let probs = [e0 / (e0 + e1), e1 / (e0 + e1)];
        Ok(FullTrace {
            steps,
            att_tanh,
            alpha,
            pooled,
            logits,
            probs,
        })
    }

    /// Forward pass returning the public trace.
    pub fn forward(&self, sequence: &[Vec<f64>]) -> Result<ForwardTrace> {
        let t = self.full_forward(sequence)?;
        Ok(ForwardTrace {
            hidden: t.steps.iter().map(|s| s.h().to_vec()).collect(),
            attention: t.alpha,
            pooled: t.pooled,
            logits: t.logits,
            probability: t.probs[1],
        })
    }

    /// Mean cross-entropy over the batch plus exact gradients for every
    /// parameter (BPTT through the cells, attention and head).
    pub fn loss_and_gradients(
        &self,
        batch: &[(&[Vec<f64>], u8)],
    ) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Config("batch must be nonempty".into()));
        }
        let mut loss = 0.0;
        let mut grads = vec![0.0; self.params.len()];
        let scale = 1.0 / batch.len() as f64;
        for &(sequence, label) in batch {
            if label > 1 {
                return Err(Error::Config(format!("label must be 0 or 1, got {label}")));
            }
            let trace = self.full_forward(sequence)?;
            let p_true = trace.probs[label as usize].max(f64::MIN_POSITIVE);
            loss -= scale * p_true.ln();
            let mut dlogits = [trace.probs[0] * scale, trace.probs[1] * scale];
            dlogits[label as usize] -= scale;
            self.backward(&trace, dlogits, &mut grads);
        }
        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite aggregator loss: {loss}")));
        }
        for (idx, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                return Err(Error::Numeric(format!(
                    "non-finite gradient in tensor `{}`",
                    self.tensor_name(idx)
                )));
            }
        }
        Ok((loss, grads))
    }

    fn backward(&self, trace: &FullTrace, dlogits: [f64; 2], grads: &mut [f64]) {
        let hd = self.hidden;
        let l = self.layout();
        let n = trace.steps.len();

        // Head.
        let mut d_pooled = vec![0.0; hd];
        for j in 0..hd {
            grads[l.w_o + j] += dlogits[0] * trace.pooled[j];
            grads[l.w_o + hd + j] += dlogits[1] * trace.pooled[j];
            d_pooled[j] =
                self.params[l.w_o + j] * dlogits[0] + self.params[l.w_o + hd + j] * dlogits[1];
        }
        grads[l.b_o] += dlogits[0];
        grads[l.b_o + 1] += dlogits[1];

        // Attention: v = Σ α_i h_i, α = softmax(s), s_i = uᵀ tanh(W_a h_i + b_a).
        let mut d_h = vec![vec![0.0; hd]; n];
        let mut d_alpha = vec![0.0; n];
        for i in 0..n {
            let hi = trace.steps[i].h();
            for k in 0..hd {
                d_alpha[i] += hi[k] * d_pooled[k];
                d_h[i][k] += trace.alpha[i] * d_pooled[k];
            }
        }
        let dot: f64 = (0..n).map(|i| trace.alpha[i] * d_alpha[i]).sum();
        for i in 0..n {
            let ds = trace.alpha[i] * (d_alpha[i] - dot);
            let t = &trace.att_tanh[i];
            let hi = trace.steps[i].h();
            for r in 0..hd {
                grads[l.u + r] += ds * t[r];
                let dz = ds * self.params[l.u + r] * (1.0 - t[r] * t[r]);
                grads[l.b_a + r] += dz;
                let wa = l.w_a + r * hd;
                for j in 0..hd {
                    grads[wa + j] += dz * hi[j];
                    d_h[i][j] += self.params[wa + j] * dz;
                }
            }
        }

        // BPTT.
        let mut d_c_next = vec![0.0; hd];
        for t in (0..n).rev() {
            let dh: Vec<f64> = d_h[t].clone();
            match &trace.steps[t] {
                StepCache::Lstm {
                    x,
                    h_prev,
                    c_prev,
                    i,
                    f,
                    g,
                    o,
                    tanh_c,
                    ..
                } => {
                    let mut dc = d_c_next.clone();
                    let mut dpre = vec![0.0; 4 * hd];
                    for k in 0..hd {
                        let do_ = dh[k] * tanh_c[k];
                        dpre[3 * hd + k] = do_ * o[k] * (1.0 - o[k]);
                        dc[k] += dh[k] * o[k] * (1.0 - tanh_c[k] * tanh_c[k]);
                        dpre[k] = dc[k] * g[k] * i[k] * (1.0 - i[k]);
                        dpre[hd + k] = dc[k] * c_prev[k] * f[k] * (1.0 - f[k]);
                        dpre[2 * hd + k] = dc[k] * i[k] * (1.0 - g[k] * g[k]);
                    }
                    for k in 0..hd {
                        d_c_next[k] = dc[k] * f[k];
                    }
                    let mut dh_prev = vec![0.0; hd];
                    for r in 0..4 * hd {
                        let dp = dpre[r];
                        grads[l.b + r] += dp;
                        let wx = l.w_x + r * self.input_dim;
                        for (d, &xd) in x.iter().enumerate() {
                            grads[wx + d] += dp * xd;
                        }
                        let wh = l.w_h + r * hd;
                        for j in 0..hd {
                            grads[wh + j] += dp * h_prev[j];
                            dh_prev[j] += self.params[wh + j] * dp;
                        }
                    }
                    if t > 0 {
                        for j in 0..hd {
                            d_h[t - 1][j] += dh_prev[j];
                        }
                    }
                }
                StepCache::Gru {
                    x,
                    h_prev,
                    z,
                    r,
                    a,
                    g,
                    ..
                } => {
                    let mut dpre_z = vec![0.0; hd];
                    let mut dpre_r = vec![0.0; hd];
                    let mut dpre_g = vec![0.0; hd];
                    let mut dh_prev = vec![0.0; hd];
                    for k in 0..hd {
                        let dz = dh[k] * (h_prev[k] - g[k]);
                        dpre_z[k] = dz * z[k] * (1.0 - z[k]);
                        let dg = dh[k] * (1.0 - z[k]);
                        dpre_g[k] = dg * (1.0 - g[k] * g[k]);
                        dh_prev[k] += dh[k] * z[k];
                    }
                    // Candidate gate recurrent input is a = r ⊙ h_prev.
                    let mut da = vec![0.0; hd];
                    for rr in 0..hd {
                        let wh = l.w_h + (2 * hd + rr) * hd;
                        for j in 0..hd {
                            da[j] += self.params[wh + j] * dpre_g[rr];
                        }
                    }
                    for k in 0..hd {
                        let dr = da[k] * h_prev[k];
                        dpre_r[k] = dr * r[k] * (1.0 - r[k]);
                        dh_prev[k] += da[k] * r[k];
                    }
                    for (block, dpre) in [(0, &dpre_z), (1, &dpre_r), (2, &dpre_g)] {
                        for k in 0..hd {
                            let row = block * hd + k;
                            let dp = dpre[k];
                            grads[l.b + row] += dp;
                            let wx = l.w_x + row * self.input_dim;
                            for (d, &xd) in x.iter().enumerate() {
                                grads[wx + d] += dp * xd;
                            }
                            let wh = l.w_h + row * hd;
                            let rec_in: &[f64] = if block == 2 { a } else { h_prev };
                            for j in 0..hd {
                                grads[wh + j] += dp * rec_in[j];
                                if block != 2 {
                                    dh_prev[j] += self.params[wh + j] * dp;
                                }
                            }
                        }
                    }
                    if t > 0 {
                        for j in 0..hd {
                            d_h[t - 1][j] += dh_prev[j];
                        }
                    }
                }
            }
        }
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let l = self.layout();
        let g = self.kind.n_gates();
        let slice = |start: usize, len: usize| self.params[start..start + len].to_vec();
        let ckpt = Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            meta: vec![
                ("cell".into(), self.kind.discriminant()),
                ("input_dim".into(), self.input_dim as i64),
                ("hidden".into(), self.hidden as i64),
                ("seed".into(), self.seed as i64),
            ],
            tensors: vec![
                CheckpointTensor {
                    name: "w_x".into(),
                    shape: vec![g * self.hidden, self.input_dim],
                    data: slice(l.w_x, g * self.hidden * self.input_dim),
                },
                CheckpointTensor {
                    name: "w_h".into(),
                    shape: vec![g * self.hidden, self.hidden],
                    data: slice(l.w_h, g * self.hidden * self.hidden),
                },
                CheckpointTensor {
                    name: "b".into(),
                    shape: vec![g * self.hidden],
                    data: slice(l.b, g * self.hidden),
                },
                CheckpointTensor {
                    name: "w_a".into(),
                    shape: vec![self.hidden, self.hidden],
                    data: slice(l.w_a, self.hidden * self.hidden),
                },
                CheckpointTensor {
                    name: "b_a".into(),
                    shape: vec![self.hidden],
                    data: slice(l.b_a, self.hidden),
                },
                CheckpointTensor {
                    name: "u".into(),
                    shape: vec![self.hidden],
                    data: slice(l.u, self.hidden),
                },
                CheckpointTensor {
                    name: "w_o".into(),
                    shape: vec![2, self.hidden],
                    data: slice(l.w_o, 2 * self.hidden),
                },
                CheckpointTensor {
                    name: "b_o".into(),
                    shape: vec![2],
                    data: slice(l.b_o, 2),
                },
            ],
        };
        ckpt.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = Checkpoint::load(path)?;
        if ckpt.kind != CHECKPOINT_KIND {
            return Err(Error::Data(format!(
                "checkpoint kind `{}` is not an attention RNN",
                ckpt.kind
            )));
        }
        let kind = RnnCellKind::from_discriminant(ckpt.meta("cell")?)?;
        let input_dim = ckpt.meta("input_dim")? as usize;
        let hidden = ckpt.meta("hidden")? as usize;
        let seed = ckpt.meta("seed")? as u64;
        let l = layout(kind, input_dim, hidden);
        let g = kind.n_gates();
        let mut params = vec![0.0; l.total];
        let expected: [(&str, Vec<usize>, usize); 8] = [
            ("w_x", vec![g * hidden, input_dim], l.w_x),
            ("w_h", vec![g * hidden, hidden], l.w_h),
            ("b", vec![g * hidden], l.b),
            ("w_a", vec![hidden, hidden], l.w_a),
            ("b_a", vec![hidden], l.b_a),
            ("u", vec![hidden], l.u),
            ("w_o", vec![2, hidden], l.w_o),
            ("b_o", vec![2], l.b_o),
        ];
        for (name, shape, offset) in expected {
            let tensor = ckpt.tensor(name)?;
            if tensor.shape != shape {
                return Err(Error::Data(format!(
                    "tensor `{name}` has shape {:?}, expected {shape:?}",
                    tensor.shape
                )));
            }
            params[offset..offset + tensor.data.len()].copy_from_slice(&tensor.data);
        }
        Ok(AttentionRnnModel {
            kind,
            input_dim,
            hidden,
            seed,
            params,
        })
    }
}
