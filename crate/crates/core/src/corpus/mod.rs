//! Corpus model: documents, fixed-length paragraph chunks, relevance
//! judgements, candidate pools, and dataset splits.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub mod io;
pub mod synthetic;
mod tokenizer;

pub use tokenizer::{
    split_tokens, tokenize, Vocabulary, CLS_ID, PAD_ID, RESERVED_IDS, SEP_ID, UNK_ID,
};

/// Default paragraph window in tokens.
pub const DEFAULT_PARAGRAPH_LEN: usize = 256;
/// Default combined budget for an encoder input pair.
pub const DEFAULT_MAX_PAIR_TOKENS: usize = 512;
/// Positions reserved for the CLS and two SEP markers in a pair input.
pub const PAIR_SEPARATOR_POSITIONS: usize = 3;

/// A fixed-size window of a document's token sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Paragraph {
    pub doc_id: String,
    /// 0-based ordinal within the document.
    pub index: usize,
    pub tokens: Vec<u32>,
}

/// A tokenized long document and its paragraph chunks.
#[derive(Debug, Clone)]
pub struct Document {
    pub id: String,
    pub text: String,
    pub tokens: Vec<u32>,
    pub paragraphs: Vec<Paragraph>,
}

impl Document {
    /// Tokenize `text` and chunk it into `paragraph_len`-token paragraphs.
    pub fn from_text(
        id: impl Into<String>,
        text: impl Into<String>,
        vocab: &Vocabulary,
        lowercase: bool,
        paragraph_len: usize,
    ) -> Result<Self> {
        let id = id.into();
        let text = text.into();
        let tokens = tokenize(&text, vocab, lowercase);
        let paragraphs = chunk_document(&id, &tokens, paragraph_len)?;
        Ok(Document {
            id,
            text,
            tokens,
            paragraphs,
        })
    }
}

/// Split a token sequence into contiguous fixed-size paragraphs. Every chunk
/// except possibly the last has exactly `paragraph_len` tokens; an empty
/// document yields no paragraphs.
pub fn chunk_document(doc_id: &str, tokens: &[u32], paragraph_len: usize) -> Result<Vec<Paragraph>> {
    if paragraph_len == 0 {
        return Err(Error::Config("paragraph_len must be >= 1".into()));
    }
    Ok(tokens
        .chunks(paragraph_len)
        .enumerate()
        .map(|(index, chunk)| Paragraph {
            doc_id: doc_id.to_string(),
            index,
            tokens: chunk.to_vec(),
        })
        .collect())
}

/// Truncate a (query, candidate) token pair to fit the encoder input budget.
///
/// The usable budget is `max_total` minus the three separator positions.
/// Tokens are removed from the tail of whichever segment is currently longer,
/// one at a time; on ties the candidate segment loses first so the query is
/// preserved.
pub fn truncate_pair_symmetric(
    query: &[u32],
    candidate: &[u32],
    max_total: usize,
) -> Result<(Vec<u32>, Vec<u32>)> {
    if max_total < PAIR_SEPARATOR_POSITIONS + 1 {
        return Err(Error::Config(format!(
            "max_total must be >= {}, got {max_total}",
            PAIR_SEPARATOR_POSITIONS + 1
        )));
    }
    let budget = max_total - PAIR_SEPARATOR_POSITIONS;
    let mut q_len = query.len();
    let mut c_len = candidate.len();
    while q_len + c_len > budget {
        if c_len >= q_len {
            c_len -= 1;
        } else {
            q_len -= 1;
        }
    }
    Ok((query[..q_len].to_vec(), candidate[..c_len].to_vec()))
}

/// Binary relevance judgements: query id → relevant document ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QrelSet {
    map: BTreeMap<String, BTreeSet<String>>,
}

impl QrelSet {
    pub fn new() -> Self {
        Self::default()
    }

    /// Returns false if the (query, doc) pair was already present.
    pub fn insert(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>) -> bool {
        self.map
            .entry(query_id.into())
            .or_default()
            .insert(doc_id.into())
    }

    pub fn relevant(&self, query_id: &str) -> Option<&BTreeSet<String>> {
        self.map.get(query_id)
    }

    pub fn is_relevant(&self, query_id: &str, doc_id: &str) -> bool {
        self.map
            .get(query_id)
            .map_or(false, |docs| docs.contains(doc_id))
    }

    pub fn queries(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &BTreeSet<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Keep only the given queries.
    pub fn restrict_to(&self, queries: &BTreeSet<String>) -> QrelSet {
        QrelSet {
            map: self
                .map
                .iter()
                .filter(|(q, _)| queries.contains(*q))
                .map(|(q, d)| (q.clone(), d.clone()))
                .collect(),
        }
    }
}

/// Per-query ordered candidate document lists.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CandidatePool {
    map: BTreeMap<String, Vec<String>>,
}

impl CandidatePool {
    pub fn new() -> Self {
        Self::default()
    }

    /// Append a candidate; duplicate ids within one query are rejected.
    pub fn push(&mut self, query_id: impl Into<String>, doc_id: impl Into<String>) -> Result<()> {
        let query_id = query_id.into();
        let doc_id = doc_id.into();
        let list = self.map.entry(query_id.clone()).or_default();
        if list.contains(&doc_id) {
            return Err(Error::Data(format!(
                "duplicate candidate `{doc_id}` in pool for query `{query_id}`"
            )));
        }
        list.push(doc_id);
        Ok(())
    }

    pub fn candidates(&self, query_id: &str) -> Option<&[String]> {
        self.map.get(query_id).map(|v| v.as_slice())
    }

    pub fn queries(&self) -> impl Iterator<Item = &String> {
        self.map.keys()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&String, &Vec<String>)> {
        self.map.iter()
    }

    pub fn len(&self) -> usize {
        self.map.len()
    }

    pub fn is_empty(&self) -> bool {
        self.map.is_empty()
    }

    /// Largest per-query pool size.
    pub fn pool_size(&self) -> usize {
        self.map.values().map(|v| v.len()).max().unwrap_or(0)
    }

    pub fn restrict_to(&self, queries: &BTreeSet<String>) -> CandidatePool {
        CandidatePool {
            map: self
                .map
                .iter()
                .filter(|(q, _)| queries.contains(*q))
                .map(|(q, d)| (q.clone(), d.clone()))
                .collect(),
        }
    }
}

/// A reference to one paragraph of one document.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ParaRef {
    pub doc_id: String,
    pub para_index: usize,
}

impl ParaRef {
    pub fn new(doc_id: impl Into<String>, para_index: usize) -> Self {
        ParaRef {
            doc_id: doc_id.into(),
            para_index,
        }
    }
}

impl std::fmt::Display for ParaRef {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}#{}", self.doc_id, self.para_index)
    }
}

/// One paragraph-level relevance task: a query paragraph, a candidate
/// paragraph pool, and the relevant subset of that pool.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParagraphTask {
    pub query_id: String,
    pub query: ParaRef,
    pub pool: Vec<ParaRef>,
    pub relevant: BTreeSet<ParaRef>,
}

/// Validation-split parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub validation_fraction: f64,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            validation_fraction: 0.2,
            seed: 0,
        }
    }
}

/// Deterministically split queries into train and validation sets.
/// Validation gets `ceil(fraction * n)` items; both sides preserve the
/// original relative order.
pub fn split_validation<T: Clone>(items: &[T], spec: &SplitSpec) -> Result<(Vec<T>, Vec<T>)> {
    if !(spec.validation_fraction > 0.0 && spec.validation_fraction < 1.0) {
        return Err(Error::Config(format!(
            "validation_fraction must be in (0, 1), got {}",
            spec.validation_fraction
        )));
    }
    if items.len() < 5 {
        return Err(Error::Data(format!(
            "cannot split {} queries; at least 5 are required",
            items.len()
        )));
    }
    let n = items.len();
    let n_validation = (spec.validation_fraction * n as f64).ceil() as usize;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    indices.shuffle(&mut rng);
    let mut validation_idx: Vec<usize> = indices[..n_validation].to_vec();
    validation_idx.sort_unstable();
    let validation_set: BTreeSet<usize> = validation_idx.iter().copied().collect();
    let validation = validation_idx.iter().map(|&i| items[i].clone()).collect();
    let train = (0..n)
        .filter(|i| !validation_set.contains(i))
        .map(|i| items[i].clone())
        .collect();
    Ok((train, validation))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc_tokens(n: usize) -> Vec<u32> {
        (0..n as u32).map(|i| i + RESERVED_IDS).collect()
    }

    #[test]
    fn chunking_produces_fixed_windows() {
        let paras = chunk_document("d1", &doc_tokens(600), 256).unwrap();
        let sizes: Vec<usize> = paras.iter().map(|p| p.tokens.len()).collect();
        assert_eq!(sizes, vec![256, 256, 88]);
        assert_eq!(paras[2].index, 2);
    }

    #[test]
    fn chunking_exact_fit_is_one_chunk() {
        let paras = chunk_document("d1", &doc_tokens(256), 256).unwrap();
        assert_eq!(paras.len(), 1);
        assert_eq!(paras[0].tokens.len(), 256);
    }

    #[test]
    fn chunking_empty_document_is_empty() {
        assert!(chunk_document("d1", &[], 256).unwrap().is_empty());
    }

    #[test]
    fn chunk_concat_round_trips() {
        let tokens = doc_tokens(1000);
        for len in [1, 7, 256, 999, 1000, 2000] {
            let paras = chunk_document("d", &tokens, len).unwrap();
            let concat: Vec<u32> = paras.iter().flat_map(|p| p.tokens.clone()).collect();
            assert_eq!(concat, tokens);
        }
    }

    #[test]
    fn truncation_within_budget_is_identity() {
        let q = doc_tokens(100);
        let c = doc_tokens(100);
        let (q2, c2) = truncate_pair_symmetric(&q, &c, 512).unwrap();
        assert_eq!(q2, q);
        assert_eq!(c2, c);
    }

    #[test]
    fn truncation_removes_from_longer_side_candidate_first() {
        // Simulating the one-at-a-time rule: removals alternate starting with
        // the candidate on ties, landing on (255, 254) for 400/400.
        let q = doc_tokens(400);
        let c = doc_tokens(400);
        let (q2, c2) = truncate_pair_symmetric(&q, &c, 512).unwrap();
        assert_eq!((q2.len(), c2.len()), (255, 254));
        assert_eq!(q2, q[..255].to_vec());
    }

    #[test]
    fn truncation_boundary_is_untouched() {
        let q = doc_tokens(500);
        let c = doc_tokens(9);
        let (q2, c2) = truncate_pair_symmetric(&q, &c, 512).unwrap();
        assert_eq!((q2.len(), c2.len()), (500, 9));
    }

    #[test]
    fn truncation_rejects_tiny_budget() {
        assert!(truncate_pair_symmetric(&[], &[], 3).is_err());
    }

    #[test]
    fn split_sizes_match_ceiling() {
        let queries: Vec<String> = (0..285).map(|i| format!("q{i}")).collect();
        let spec = SplitSpec {
            validation_fraction: 0.2,
            seed: 11,
        };
        let (train, validation) = split_validation(&queries, &spec).unwrap();
        assert_eq!(validation.len(), 57);
        assert_eq!(train.len(), 228);
    }

    #[test]
    fn split_is_deterministic_and_disjoint() {
        let queries: Vec<String> = (0..10).map(|i| format!("q{i}")).collect();
        let spec = SplitSpec {
            validation_fraction: 0.2,
            seed: 3,
        };
        let (train1, val1) = split_validation(&queries, &spec).unwrap();
        let (train2, val2) = split_validation(&queries, &spec).unwrap();
        assert_eq!(val1.len(), 2);
        assert_eq!((train1.clone(), val1.clone()), (train2, val2));
        let mut all: Vec<String> = train1.into_iter().chain(val1).collect();
        all.sort();
        let mut expected = queries.clone();
        expected.sort();
        assert_eq!(all, expected);
    }

    #[test]
    fn split_rejects_fewer_than_five() {
        let queries = vec!["a", "b", "c", "d"];
        assert!(split_validation(&queries, &SplitSpec::default()).is_err());
    }

    #[test]
    fn pool_rejects_duplicates() {
        let mut pool = CandidatePool::new();
        pool.push("q1", "d1").unwrap();
        assert!(pool.push("q1", "d1").is_err());
        pool.push("q2", "d1").unwrap();
    }
}
