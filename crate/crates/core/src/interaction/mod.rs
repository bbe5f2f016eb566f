//! Stage-2 paragraph-level interaction modeling.
//!
//! For a query document and one candidate, entry (i, j) of the interaction
//! matrix is the relevance representation of (query paragraph i, candidate
//! paragraph j), restricted to the first N query and first M candidate
//! paragraphs. Component-wise max-pooling over the candidate axis turns the
//! matrix into one relevance vector per query paragraph.
//!
//! Documents shorter than N/M yield smaller matrices with their true sizes
//! recorded; no padding ever enters the pool (zero-padding would corrupt the
//! component-wise max, since representations can be negative).
//!
//! Matrices hold `f32` values: that is the on-disk precision, and keeping the
//! in-memory values identical makes cache round-trips bit-exact.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::corpus::{truncate_pair_symmetric, Document, DEFAULT_MAX_PAIR_TOKENS};
use crate::error::{Error, Result};
use crate::pair_encoder::{ExternalVectorStore, MicroEncoder};

mod cache;

pub use cache::{read_cache, write_cache};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct InteractionConfig {
    /// N: query paragraphs considered.
    pub max_query_paragraphs: usize,
    /// M: candidate paragraphs considered.
    pub max_candidate_paragraphs: usize,
}

impl Default for InteractionConfig {
    fn default() -> Self {
        InteractionConfig {
            max_query_paragraphs: 54,
            max_candidate_paragraphs: 40,
        }
    }
}

impl InteractionConfig {
    pub fn validate(&self) -> Result<()> {
        if self.max_query_paragraphs == 0 || self.max_candidate_paragraphs == 0 {
            return Err(Error::Config("N and M must be >= 1".into()));
        }
        Ok(())
    }
}

/// An n × m grid of pair relevance vectors, stored row-major as
/// `values[(i * m + j) * d_repr + k]`.
#[derive(Debug, Clone, PartialEq)]
pub struct InteractionMatrix {
    pub query_id: String,
    pub cand_id: String,
    pub n: usize,
    pub m: usize,
    pub d_repr: usize,
    pub values: Vec<f32>,
}

impl InteractionMatrix {
    pub fn cell(&self, i: usize, j: usize) -> &[f32] {
        let start = (i * self.m + j) * self.d_repr;
        &self.values[start..start + self.d_repr]
    }
}

/// One pooled relevance vector per query paragraph.
#[derive(Debug, Clone, PartialEq)]
pub struct DocRelevanceSequence {
    pub query_id: String,
    pub cand_id: String,
    pub vectors: Vec<Vec<f32>>,
}

impl DocRelevanceSequence {
    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    /// The sequence as f64 rows for the aggregator.
    pub fn to_inputs(&self) -> Vec<Vec<f64>> {
        self.vectors
            .iter()
            .map(|v| v.iter().map(|&x| x as f64).collect())
            .collect()
    }
}

/// Anything that can produce the pair representation for matrix cell (i, j).
pub trait PairRepresentationSource: Sync {
    fn d_repr(&self) -> usize;

    fn represent(
        &self,
        query_id: &str,
        cand_id: &str,
        i: usize,
        j: usize,
        query_tokens: &[u32],
        cand_tokens: &[u32],
    ) -> Result<Vec<f32>>;
}

/// Runs the built-in encoder on symmetrically truncated pairs.
pub struct EncoderSource<'a> {
    pub encoder: &'a MicroEncoder,
    pub max_pair_tokens: usize,
}

impl<'a> EncoderSource<'a> {
    pub fn new(encoder: &'a MicroEncoder) -> Self {
        EncoderSource {
            encoder,
            max_pair_tokens: DEFAULT_MAX_PAIR_TOKENS,
        }
    }
}

impl PairRepresentationSource for EncoderSource<'_> {
    fn d_repr(&self) -> usize {
        self.encoder.cfg.d_repr
    }

    fn represent(
        &self,
        _query_id: &str,
        _cand_id: &str,
        _i: usize,
        _j: usize,
        query_tokens: &[u32],
        cand_tokens: &[u32],
    ) -> Result<Vec<f32>> {
        let (q, c) = truncate_pair_symmetric(query_tokens, cand_tokens, self.max_pair_tokens)?;
        let repr = self.encoder.encode_pair(&q, &c)?;
        Ok(repr.into_iter().map(|v| v as f32).collect())
    }
}

/// Looks cells up in an imported vector store; a missing cell names the
/// (query, candidate, i, j) coordinate.
pub struct StoreSource<'a>(pub &'a ExternalVectorStore);

impl PairRepresentationSource for StoreSource<'_> {
    fn d_repr(&self) -> usize {
        self.0.d_repr()
    }

    fn represent(
        &self,
        query_id: &str,
        cand_id: &str,
        i: usize,
        j: usize,
        _query_tokens: &[u32],
        _cand_tokens: &[u32],
    ) -> Result<Vec<f32>> {
        self.0
            .get(query_id, cand_id, i as u16, j as u16)
            .map(|v| v.to_vec())
            .ok_or_else(|| {
                Error::Data(format!(
                    "vector store has no entry for cell ({query_id}, {cand_id}, {i}, {j})"
                ))
            })
    }
}

/// Build the interaction matrix for one (query, candidate) document pair.
pub fn build_interaction_matrix(
    source: &dyn PairRepresentationSource,
    query_doc: &Document,
    cand_doc: &Document,
    cfg: &InteractionConfig,
) -> Result<InteractionMatrix> {
    cfg.validate()?;
    if query_doc.paragraphs.is_empty() {
        return Err(Error::Data(format!(
            "query document `{}` has no paragraphs",
            query_doc.id
        )));
    }
    if cand_doc.paragraphs.is_empty() {
        return Err(Error::Data(format!(
            "candidate document `{}` has no paragraphs",
            cand_doc.id
        )));
    }
    let n = query_doc.paragraphs.len().min(cfg.max_query_paragraphs);
    let m = cand_doc.paragraphs.len().min(cfg.max_candidate_paragraphs);
    let d_repr = source.d_repr();
    let mut values = Vec::with_capacity(n * m * d_repr);
    for i in 0..n {
        for j in 0..m {
            let repr = source.represent(
                &query_doc.id,
                &cand_doc.id,
                i,
                j,
                &query_doc.paragraphs[i].tokens,
                &cand_doc.paragraphs[j].tokens,
            )?;
            if repr.len() != d_repr {
                return Err(Error::Data(format!(
                    "representation for cell ({i}, {j}) has dimension {}, expected {d_repr}",
                    repr.len()
                )));
            }
            if repr.iter().any(|v| !v.is_finite()) {
                return Err(Error::Numeric(format!(
                    "non-finite representation at cell ({}, {}, {i}, {j})",
                    query_doc.id, cand_doc.id
                )));
            }
            values.extend_from_slice(&repr);
        }
    }
    Ok(InteractionMatrix {
        query_id: query_doc.id.clone(),
        cand_id: cand_doc.id.clone(),
        n,
        m,
        d_repr,
        values,
    })
}

/// Build matrices for many candidates of one query, in parallel. Output
/// order matches `candidates`; results are independent of the thread count.
pub fn build_matrices_for_query(
    source: &dyn PairRepresentationSource,
    query_doc: &Document,
    candidates: &[&Document],
    cfg: &InteractionConfig,
) -> Result<Vec<InteractionMatrix>> {
    candidates
        .par_iter()
        .map(|cand| build_interaction_matrix(source, query_doc, cand, cfg))
        .collect()
}

/// Component-wise max over the candidate axis: `out[i][k] = max_j m[i][j][k]`.
pub fn maxpool_over_candidates(matrix: &InteractionMatrix) -> DocRelevanceSequence {
    let mut vectors = Vec::with_capacity(matrix.n);
    for i in 0..matrix.n {
        let mut pooled = matrix.cell(i, 0).to_vec();
        for j in 1..matrix.m {
            for (p, &v) in pooled.iter_mut().zip(matrix.cell(i, j)) {
                if v > *p {
                    *p = v;
                }
            }
        }
        vectors.push(pooled);
    }
    DocRelevanceSequence {
        query_id: matrix.query_id.clone(),
        cand_id: matrix.cand_id.clone(),
        vectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pair_encoder::EncoderConfig;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn doc_with_paras(id: &str, n_paras: usize, para_len: usize, vocab_size: u32) -> Document {
        let mut rng = ChaCha8Rng::seed_from_u64(id.bytes().map(u64::from).sum());
        let tokens: Vec<u32> = (0..n_paras * para_len)
            .map(|_| rng.gen_range(4..vocab_size))
            .collect();
        let paragraphs = crate::corpus::chunk_document(id, &tokens, para_len).unwrap();
        Document {
            id: id.into(),
            text: String::new(),
            tokens,
            paragraphs,
        }
    }

    fn encoder() -> MicroEncoder {
        MicroEncoder::init(EncoderConfig {
            d_embed: 4,
            d_repr: 6,
            vocab_size: 64,
            seed: 3,
        })
        .unwrap()
    }

    fn matrix_from(values: Vec<f32>, n: usize, m: usize, d: usize) -> InteractionMatrix {
        InteractionMatrix {
            query_id: "q".into(),
            cand_id: "c".into(),
            n,
            m,
            d_repr: d,
            values,
        }
    }

    #[test]
    fn shape_follows_min_rule() {
        let enc = encoder();
        let source = EncoderSource::new(&enc);
        let q = doc_with_paras("q", 2, 16, 64);
        let c = doc_with_paras("c", 3, 16, 64);
        let mat = build_interaction_matrix(&source, &q, &c, &InteractionConfig::default()).unwrap();
        assert_eq!((mat.n, mat.m, mat.d_repr), (2, 3, 6));
        assert_eq!(mat.values.len(), 2 * 3 * 6);
    }

    #[test]
    fn long_query_is_capped_at_n() {
        let enc = encoder();
        let source = EncoderSource::new(&enc);
        let q = doc_with_paras("q", 60, 4, 64);
        let c = doc_with_paras("c", 2, 4, 64);
        let mat = build_interaction_matrix(&source, &q, &c, &InteractionConfig::default()).unwrap();
        assert_eq!(mat.n, 54);
    }

    #[test]
    fn cells_match_independent_encode_calls() {
        let enc = encoder();
        let source = EncoderSource::new(&enc);
        let q = doc_with_paras("q", 3, 16, 64);
        let c = doc_with_paras("c", 2, 16, 64);
        let mat = build_interaction_matrix(&source, &q, &c, &InteractionConfig::default()).unwrap();
        for i in 0..mat.n {
            for j in 0..mat.m {
                let (qt, ct) = truncate_pair_symmetric(
                    &q.paragraphs[i].tokens,
                    &c.paragraphs[j].tokens,
                    512,
                )
                .unwrap();
                let expect: Vec<f32> = enc
                    .encode_pair(&qt, &ct)
                    .unwrap()
                    .into_iter()
                    .map(|v| v as f32)
                    .collect();
                assert_eq!(mat.cell(i, j), expect.as_slice());
            }
        }
    }

    #[test]
    fn paragraphs_beyond_limits_do_not_influence_output() {
        let enc = encoder();
        let source = EncoderSource::new(&enc);
        let cfg = InteractionConfig {
            max_query_paragraphs: 2,
            max_candidate_paragraphs: 2,
        };
        let q = doc_with_paras("q", 4, 8, 64);
        let mut c = doc_with_paras("c", 4, 8, 64);
        let base = build_interaction_matrix(&source, &q, &c, &cfg).unwrap();
        // Mutate paragraph M+1 of the candidate; the matrix must not change.
        for t in c.paragraphs[3].tokens.iter_mut() {
            *t = 5;
        }
        let mutated = build_interaction_matrix(&source, &q, &c, &cfg).unwrap();
        assert_eq!(base.values, mutated.values);
    }

    #[test]
    fn empty_document_is_an_error() {
        let enc = encoder();
        let source = EncoderSource::new(&enc);
        let q = doc_with_paras("q", 1, 8, 64);
        let empty = Document {
            id: "e".into(),
            text: String::new(),
            tokens: vec![],
            paragraphs: vec![],
        };
        assert!(
            build_interaction_matrix(&source, &q, &empty, &InteractionConfig::default()).is_err()
        );
        assert!(
            build_interaction_matrix(&source, &empty, &q, &InteractionConfig::default()).is_err()
        );
    }

    #[test]
    fn store_source_miss_names_the_cell() {
        let store = ExternalVectorStore::new(6);
        let source = StoreSource(&store);
        let q = doc_with_paras("q", 1, 8, 64);
        let c = doc_with_paras("c", 1, 8, 64);
        let err =
            build_interaction_matrix(&source, &q, &c, &InteractionConfig::default()).unwrap_err();
        assert!(err.to_string().contains("(q, c, 0, 0)"));
    }

    #[test]
    fn maxpool_single_column_is_identity() {
        let mat = matrix_from(vec![1.0, -2.0, 3.0, 0.5], 2, 1, 2);
        let seq = maxpool_over_candidates(&mat);
        assert_eq!(seq.vectors, vec![vec![1.0, -2.0], vec![3.0, 0.5]]);
    }

    #[test]
    fn maxpool_takes_componentwise_max() {
        // Row with cells [1, 5] and [3, 2] pools to [3, 5].
        let mat = matrix_from(vec![1.0, 5.0, 3.0, 2.0], 1, 2, 2);
        let seq = maxpool_over_candidates(&mat);
        assert_eq!(seq.vectors, vec![vec![3.0, 5.0]]);
    }

    #[test]
    fn maxpool_matches_brute_force_triple_loop() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let (n, m, d) = (4, 7, 8);
        let values: Vec<f32> = (0..n * m * d).map(|_| rng.gen_range(-5.0..5.0)).collect();
        let mat = matrix_from(values, n, m, d);
        let seq = maxpool_over_candidates(&mat);
        for i in 0..n {
            for k in 0..d {
                let mut best = f32::NEG_INFINITY;
                for j in 0..m {
                    best = best.max(mat.cell(i, j)[k]);
                }
                assert_eq!(seq.vectors[i][k], best);
            }
        }
    }

    #[test]
    fn maxpool_is_invariant_to_candidate_permutation() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (n, m, d) = (3, 5, 4);
        let values: Vec<f32> = (0..n * m * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mat = matrix_from(values, n, m, d);
        // Reverse the candidate axis.
        let mut reversed = mat.clone();
        for i in 0..n {
            for j in 0..m {
                let src = mat.cell(i, m - 1 - j).to_vec();
                let start = (i * m + j) * d;
                reversed.values[start..start + d].copy_from_slice(&src);
            }
        }
        assert_eq!(
            maxpool_over_candidates(&mat).vectors,
            maxpool_over_candidates(&reversed).vectors
        );
    }

    #[test]
    fn pooled_value_dominates_and_is_attained() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let (n, m, d) = (2, 6, 3);
        let values: Vec<f32> = (0..n * m * d).map(|_| rng.gen_range(-9.0..9.0)).collect();
        let mat = matrix_from(values, n, m, d);
        let seq = maxpool_over_candidates(&mat);
        for i in 0..n {
            for k in 0..d {
                let pooled = seq.vectors[i][k];
                let mut attained = false;
                for j in 0..m {
                    assert!(pooled >= mat.cell(i, j)[k]);
                    attained |= pooled == mat.cell(i, j)[k];
                }
                assert!(attained);
            }
        }
    }
}
