//! The micro-encoder: mean-pooled token embeddings, a bilinear-style pair
//! feature block, one tanh layer producing the relevance vector, and a
//! two-class softmax head.
//!
//! For mean embeddings `eq` and `ec`, the pair feature vector is
//! `f = [eq; ec; eq ⊙ ec; |eq − ec|]`, the relevance representation is
//! `r = tanh(W1ᵀ f + b1)`, and the head produces
//! `p = softmax(W2ᵀ r + b2)`. Gradients are exact (checked against central
//! finite differences in the test suite), including the embedding table.

use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::binio::{Checkpoint, CheckpointTensor};
use crate::error::{Error, Result};

const CHECKPOINT_KIND: &str = "micro_encoder";
const INIT_RANGE: f64 = 0.08;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct EncoderConfig {
    /// Token embedding width.
    pub d_embed: usize,
    /// Relevance representation width.
    pub d_repr: usize,
    pub vocab_size: usize,
    pub seed: u64,
}

impl EncoderConfig {
    pub fn new(vocab_size: usize, seed: u64) -> Self {
        EncoderConfig {
            d_embed: 32,
            d_repr: 64,
            vocab_size,
            seed,
        }
    }

    fn validate(&self) -> Result<()> {
        if self.d_embed == 0 || self.d_repr == 0 || self.vocab_size == 0 {
            return Err(Error::Config(
                "encoder dimensions and vocabulary size must be >= 1".into(),
            ));
        }
        Ok(())
    }

    fn n_params(&self) -> usize {
        self.vocab_size * self.d_embed      // embedding
            + 4 * self.d_embed * self.d_repr // w1
            + self.d_repr                    // b1
            + self.d_repr * 2                // w2
            + 2                              // b2
    }
}

/// Flat-parameter encoder; see the module docs for the forward form.
#[derive(Debug, Clone, PartialEq)]
pub struct MicroEncoder {
    pub cfg: EncoderConfig,
    pub(crate) params: Vec<f64>,
}

/// Offsets of the named tensors inside the flat parameter vector.
struct Layout {
    embedding: usize,
    w1: usize,
    b1: usize,
    w2: usize,
    b2: usize,
}

impl MicroEncoder {
    pub fn init(cfg: EncoderConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let params = (0..cfg.n_params())
            .map(|_| rng.gen_range(-INIT_RANGE..INIT_RANGE))
            .collect();
        Ok(MicroEncoder { cfg, params })
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
        let embedding = 0;
        let w1 = embedding + self.cfg.vocab_size * self.cfg.d_embed;
        let b1 = w1 + 4 * self.cfg.d_embed * self.cfg.d_repr;
        let w2 = b1 + self.cfg.d_repr;
        let b2 = w2 + self.cfg.d_repr * 2;
        Layout {
            embedding,
            w1,
            b1,
            w2,
            b2,
        }
    }

    /// Name of the tensor owning a flat parameter index (diagnostics).
    pub fn tensor_name(&self, flat_index: usize) -> &'static str {
        let l = self.layout();
        if flat_index < l.w1 {
            "embedding"
        } else if flat_index < l.b1 {
            "w1"
        } else if flat_index < l.w2 {
            "b1"
        } else if flat_index < l.b2 {
            "w2"
        } else {
            "b2"
        }
    }

    fn mean_embedding(&self, tokens: &[u32]) -> Result<Vec<f64>> {
        if tokens.is_empty() {
            return Err(Error::Data("cannot encode an empty paragraph".into()));
        }
        let e = self.cfg.d_embed;
        let l = self.layout();
        let mut mean = vec![0.0; e];
        for &t in tokens {
            let t = t as usize;
            if t >= self.cfg.vocab_size {
                return Err(Error::Data(format!(
                    "token id {t} is outside the encoder vocabulary ({})",
                    self.cfg.vocab_size
                )));
            }
            let row = &self.params[l.embedding + t * e..l.embedding + (t + 1) * e];
            for (m, &v) in mean.iter_mut().zip(row) {
                *m += v;
            }
        }
        let inv = 1.0 / tokens.len() as f64;
        for m in &mut mean {
            *m *= inv;
        }
        Ok(mean)
    }

    /// The pair feature vector `[eq; ec; eq ⊙ ec; |eq − ec|]`.
    pub fn pair_features(&self, query: &[u32], candidate: &[u32]) -> Result<Vec<f64>> {
        let eq = self.mean_embedding(query)?;
        let ec = self.mean_embedding(candidate)?;
        let e = self.cfg.d_embed;
        let mut f = vec![0.0; 4 * e];
        for i in 0..e {
            f[i] = eq[i];
            f[e + i] = ec[i];
            f[2 * e + i] = eq[i] * ec[i];
            f[3 * e + i] = (eq[i] - ec[i]).abs();
        }
        Ok(f)
    }

    fn forward(&self, query: &[u32], candidate: &[u32]) -> Result<ForwardPass> {
        let l = self.layout();
        let r_dim = self.cfg.d_repr;
        let features = self.pair_features(query, candidate)?;
        let mut repr = vec![0.0; r_dim];
        for j in 0..r_dim {
            let mut z = self.params[l.b1 + j];
            for (i, &fi) in features.iter().enumerate() {
                z += fi * self.params[l.w1 + i * r_dim + j];
            }
            repr[j] = z.tanh();
        }
        let mut logits = [self.params[l.b2], self.params[l.b2 + 1]];
        for (j, &rj) in repr.iter().enumerate() {
            logits[0] += rj * self.params[l.w2 + j * 2];
            logits[1] += rj * self.params[l.w2 + j * 2 + 1];
        }
        let probs = softmax2(logits);
        Ok(ForwardPass {
            features,
            repr,
            probs,
        })
    }

    /// Relevance representation for a pair; every component is in (-1, 1).
    pub fn encode_pair(&self, query: &[u32], candidate: &[u32]) -> Result<Vec<f64>> {
        Ok(self.forward(query, candidate)?.repr)
    }

    /// Positive-class relevance probability in (0, 1).
    pub fn classify_pair(&self, query: &[u32], candidate: &[u32]) -> Result<f64> {
        Ok(self.forward(query, candidate)?.probs[1])
    }

    /// Mean cross-entropy over the batch and its exact gradient with respect
    /// to every parameter (embedding table included).
    pub fn loss_and_gradients(
        &self,
        batch: &[(&[u32], &[u32], u8)],
    ) -> Result<(f64, Vec<f64>)> {
        if batch.is_empty() {
            return Err(Error::Config("batch must be nonempty".into()));
        }
        let l = self.layout();
        let e = self.cfg.d_embed;
        let r_dim = self.cfg.d_repr;
        let scale = 1.0 / batch.len() as f64;
        let mut loss = 0.0;
        let mut grads = vec![0.0; self.params.len()];

        for &(query, candidate, label) in batch {
            if label > 1 {
                return Err(Error::Config(format!("label must be 0 or 1, got {label}")));
            }
            let pass = self.forward(query, candidate)?;
            let p_true = pass.probs[label as usize].max(f64::MIN_POSITIVE);
            loss -= scale * p_true.ln();

            // Softmax cross-entropy backward.
            let mut dlogits = [pass.probs[0] * scale, pass.probs[1] * scale];
            dlogits[label as usize] -= scale;

            // Head.
            let mut drepr = vec![0.0; r_dim];
            for j in 0..r_dim {
                grads[l.w2 + j * 2] += pass.repr[j] * dlogits[0];
                grads[l.w2 + j * 2 + 1] += pass.repr[j] * dlogits[1];
                drepr[j] = self.params[l.w2 + j * 2] * dlogits[0]
                    + self.params[l.w2 + j * 2 + 1] * dlogits[1];
            }
            grads[l.b2] += dlogits[0];
            grads[l.b2 + 1] += dlogits[1];

            // tanh layer.
            let mut dfeatures = vec![0.0; 4 * e];
            for j in 0..r_dim {
                let dz = drepr[j] * (1.0 - pass.repr[j] * pass.repr[j]);
                grads[l.b1 + j] += dz;
                for (i, &fi) in pass.features.iter().enumerate() {
                    grads[l.w1 + i * r_dim + j] += fi * dz;
                    dfeatures[i] += self.params[l.w1 + i * r_dim + j] * dz;
                }
            }

            // Feature block back to the mean embeddings. The |eq - ec| block
            // uses the sign subgradient (zero at exact ties).
            let eq = &pass.features[..e];
            let ec = &pass.features[e..2 * e];
            let mut d_eq = vec![0.0; e];
            let mut d_ec = vec![0.0; e];
            for i in 0..e {
                let sign = (eq[i] - ec[i]).signum() * f64::from(eq[i] != ec[i]);
                d_eq[i] = dfeatures[i] + dfeatures[2 * e + i] * ec[i] + dfeatures[3 * e + i] * sign;
                d_ec[i] =
                    dfeatures[e + i] + dfeatures[2 * e + i] * eq[i] - dfeatures[3 * e + i] * sign;
            }

            let inv_q = 1.0 / query.len() as f64;
            for &t in query {
                let base = l.embedding + t as usize * e;
                for i in 0..e {
                    grads[base + i] += d_eq[i] * inv_q;
                }
            }
            let inv_c = 1.0 / candidate.len() as f64;
            for &t in candidate {
                let base = l.embedding + t as usize * e;
                for i in 0..e {
                    grads[base + i] += d_ec[i] * inv_c;
                }
            }
        }

        if !loss.is_finite() {
            return Err(Error::Numeric(format!("non-finite stage-1 loss: {loss}")));
        }
        Ok((loss, grads))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let l = self.layout();
        let cfg = &self.cfg;
        let slice = |start: usize, len: usize| self.params[start..start + len].to_vec();
        let ckpt = Checkpoint {
            kind: CHECKPOINT_KIND.into(),
            meta: vec![
                ("d_embed".into(), cfg.d_embed as i64),
                ("d_repr".into(), cfg.d_repr as i64),
                ("vocab_size".into(), cfg.vocab_size as i64),
                ("seed".into(), cfg.seed as i64),
            ],
            tensors: vec![
                CheckpointTensor {
                    name: "embedding".into(),
                    shape: vec![cfg.vocab_size, cfg.d_embed],
                    data: slice(l.embedding, cfg.vocab_size * cfg.d_embed),
                },
                CheckpointTensor {
                    name: "w1".into(),
                    shape: vec![4 * cfg.d_embed, cfg.d_repr],
                    data: slice(l.w1, 4 * cfg.d_embed * cfg.d_repr),
                },
                CheckpointTensor {
                    name: "b1".into(),
                    shape: vec![cfg.d_repr],
                    data: slice(l.b1, cfg.d_repr),
                },
                CheckpointTensor {
                    name: "w2".into(),
                    shape: vec![cfg.d_repr, 2],
                    data: slice(l.w2, cfg.d_repr * 2),
                },
                CheckpointTensor {
                    name: "b2".into(),
                    shape: vec![2],
                    data: slice(l.b2, 2),
                },
            ],
        };
        ckpt.save(path)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let ckpt = Checkpoint::load(path)?;
        if ckpt.kind != CHECKPOINT_KIND {
            return Err(Error::Data(format!(
                "checkpoint kind `{}` is not a micro-encoder",
                ckpt.kind
            )));
        }
        let cfg = EncoderConfig {
            d_embed: ckpt.meta("d_embed")? as usize,
            d_repr: ckpt.meta("d_repr")? as usize,
            vocab_size: ckpt.meta("vocab_size")? as usize,
            seed: ckpt.meta("seed")? as u64,
        };
        cfg.validate()?;
        let mut model = MicroEncoder {
            cfg,
            params: vec![0.0; cfg.n_params()],
        };
        let l = model.layout();
        let expected: [(&str, Vec<usize>, usize); 5] = [
            ("embedding", vec![cfg.vocab_size, cfg.d_embed], l.embedding),
            ("w1", vec![4 * cfg.d_embed, cfg.d_repr], l.w1),
            ("b1", vec![cfg.d_repr], l.b1),
            ("w2", vec![cfg.d_repr, 2], l.w2),
            ("b2", vec![2], l.b2),
        ];
        for (name, shape, offset) in expected {
            let tensor = ckpt.tensor(name)?;
            if tensor.shape != shape {
                return Err(Error::Data(format!(
                    "tensor `{name}` has shape {:?}, expected {shape:?}",
                    tensor.shape
                )));
            }
            model.params[offset..offset + tensor.data.len()].copy_from_slice(&tensor.data);
        }
        Ok(model)
    }
}

struct ForwardPass {
    features: Vec<f64>,
    repr: Vec<f64>,
    probs: [f64; 2],
}

/// Numerically stable two-class softmax.
fn softmax2(logits: [f64; 2]) -> [f64; 2] {
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    [e0 / z, e1 / z]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny_encoder(seed: u64) -> MicroEncoder {
        MicroEncoder::init(EncoderConfig {
            d_embed: 3,
            d_repr: 4,
            vocab_size: 12,
            seed,
        })
        .unwrap()
    }

    #[test]
    fn identical_inputs_zero_the_difference_block() {
        let enc = tiny_encoder(1);
        let features = enc.pair_features(&[4, 5, 6], &[4, 5, 6]).unwrap();
        let e = enc.cfg.d_embed;
        assert!(features[3 * e..4 * e].iter().all(|&v| v == 0.0));
    }

    #[test]
    fn zero_embeddings_collapse_to_bias() {
        let mut enc = tiny_encoder(2);
        let l_w1 = enc.cfg.vocab_size * enc.cfg.d_embed;
        for v in enc.params[..l_w1].iter_mut() {
            *v = 0.0;
        }
        let r1 = enc.encode_pair(&[4, 5], &[6]).unwrap();
        let r2 = enc.encode_pair(&[7], &[8, 9, 10]).unwrap();
        assert_eq!(r1, r2);
        // r = tanh(b1) exactly
        let b1_start = l_w1 + 4 * enc.cfg.d_embed * enc.cfg.d_repr;
        for (j, &r) in r1.iter().enumerate() {
            assert!((r - enc.params[b1_start + j].tanh()).abs() < 1e-15);
        }
    }

    #[test]
    fn hand_computed_tiny_case_matches() {
        // d_embed = 2, d_repr = 1, vocab = 2: every number traced by hand.
        let cfg = EncoderConfig {
            d_embed: 2,
            d_repr: 1,
            vocab_size: 2,
            seed: 0,
        };
        let mut enc = MicroEncoder::init(cfg).unwrap();
        // embedding: t0 = [0.1, 0.2], t1 = [0.3, -0.4]
        let p = &mut enc.params;
        p[0] = 0.1;
        p[1] = 0.2;
        p[2] = 0.3;
        p[3] = -0.4;
        // w1 (8 x 1) = [0.5, -0.25, 1.0, 0.75, -0.5, 0.25, 2.0, -1.0], b1 = 0.1
        let w1 = [0.5, -0.25, 1.0, 0.75, -0.5, 0.25, 2.0, -1.0];
        p[4..12].copy_from_slice(&w1);
        p[12] = 0.1;

        // q = [t0], c = [t1]: eq = [0.1, 0.2], ec = [0.3, -0.4]
        // f = [0.1, 0.2, 0.3, -0.4, 0.03, -0.08, 0.2, 0.6]
        let f = enc.pair_features(&[0], &[1]).unwrap();
        let expect = [0.1, 0.2, 0.3, -0.4, 0.03, -0.08, 0.2, 0.6];
        for (a, b) in f.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        // z1 = 0.1 + dot(f, w1)
        let z1 = 0.1 + f.iter().zip(w1).map(|(a, b)| a * b).sum::<f64>();
        let r = enc.encode_pair(&[0], &[1]).unwrap();
        assert!((r[0] - z1.tanh()).abs() < 1e-15);
    }

    #[test]
    fn encode_rejects_empty_paragraphs() {
        let enc = tiny_encoder(3);
        assert!(enc.encode_pair(&[], &[4]).is_err());
        assert!(enc.encode_pair(&[4], &[]).is_err());
    }

    #[test]
    fn representation_stays_inside_open_interval() {
        let enc = tiny_encoder(4);
        let r = enc.encode_pair(&[4, 5, 6, 7], &[8, 9]).unwrap();
        assert!(r.iter().all(|&v| v > -1.0 && v < 1.0));
    }

    #[test]
    fn uniform_logits_give_half_probability() {
        let mut enc = tiny_encoder(5);
        let n = enc.params.len();
        // zero the head
        for v in enc.params[n - (enc.cfg.d_repr * 2 + 2)..].iter_mut() {
            *v = 0.0;
        }
        let p = enc.classify_pair(&[4, 5], &[6]).unwrap();
        assert!((p - 0.5).abs() < 1e-15);
    }

    #[test]
    fn class_probabilities_sum_to_one() {
        let enc = tiny_encoder(6);
        let pass = enc.forward(&[4, 5], &[6, 7]).unwrap();
        assert!((pass.probs[0] + pass.probs[1] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn large_logit_margin_saturates_probability() {
        let p = softmax2([0.0, 10.0]);
        assert!(p[1] > 0.9999);
    }

    #[test]
    fn checkpoint_round_trip_is_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("encoder.ckpt");
        let enc = tiny_encoder(7);
        enc.save(&path).unwrap();
        let loaded = MicroEncoder::load(&path).unwrap();
        assert_eq!(enc, loaded);
    }

    #[test]
    fn gradients_match_finite_differences() {
        let mut enc = tiny_encoder(8);
        let q1 = vec![4u32, 5, 6];
        let c1 = vec![7u32, 8];
        let q2 = vec![9u32];
        let c2 = vec![10u32, 11, 4];
        let batch: Vec<(&[u32], &[u32], u8)> =
            vec![(&q1, &c1, 1), (&q2, &c2, 0), (&q1, &c2, 0)];
        let (_, grads) = enc.loss_and_gradients(&batch).unwrap();
        let eps = 1e-5;
        for i in 0..enc.params.len() {
            let orig = enc.params[i];
            enc.params[i] = orig + eps;
            let (lp, _) = enc.loss_and_gradients(&batch).unwrap();
            enc.params[i] = orig - eps;
            let (lm, _) = enc.loss_and_gradients(&batch).unwrap();
            enc.params[i] = orig;
            let numeric = (lp - lm) / (2.0 * eps);
            let denom = numeric.abs().max(grads[i].abs()).max(1e-6);
            assert!(
                (numeric - grads[i]).abs() / denom < 1e-4,
                "param {i} ({}): analytic {} vs numeric {numeric}",
                enc.tensor_name(i),
                grads[i],
            );
        }
    }

    #[test]
    fn duplicated_example_matches_single_example_loss() {
        let enc = tiny_encoder(9);
        let q = vec![4u32, 5];
        let c = vec![6u32];
        let single: Vec<(&[u32], &[u32], u8)> = vec![(&q, &c, 1)];
        let double: Vec<(&[u32], &[u32], u8)> = vec![(&q, &c, 1), (&q, &c, 1)];
        let (l1, _) = enc.loss_and_gradients(&single).unwrap();
        let (l2, _) = enc.loss_and_gradients(&double).unwrap();
        assert!((l1 - l2).abs() < 1e-15);
    }
}
