//! First-stage retrieval: BM25 over an inverted index.
//!
//! Scoring uses the formula
//! `sum_t idf(t) * tf * (k1 + 1) / (tf + k1 * (1 - b + b * dl / avgdl))`
//! with `idf(t) = ln(1 + (N - df + 0.5) / (df + 0.5))`, summed over the
//! distinct terms of the query. Documents and queries are both truncated to
//! the index's `doc_prefix_len` leading tokens; disambiguating which side the
//! input-length limit applies to is a documented choice of this engine.

use std::collections::BTreeSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{CandidatePool, Document, QrelSet};
use crate::error::{Error, Result};

mod index;
mod run;

pub use index::{build_index, InvertedIndex, Posting};
pub use run::RetrievalRun;

/// BM25 parameters plus the indexing prefix length.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct Bm25Params {
    pub k1: f64,
    pub b: f64,
    /// Documents (and queries) are truncated to this many leading tokens.
    pub doc_prefix_len: usize,
}

impl Default for Bm25Params {
    fn default() -> Self {
        Bm25Params {
            k1: 0.9,
            b: 0.4,
            doc_prefix_len: 250,
        }
    }
}

impl Bm25Params {
    pub fn validate(&self) -> Result<()> {
        if self.k1 < 0.0 || !self.k1.is_finite() {
            return Err(Error::Config(format!("k1 must be >= 0, got {}", self.k1)));
        }
        if !(0.0..=1.0).contains(&self.b) {
            return Err(Error::Config(format!("b must be in [0, 1], got {}", self.b)));
        }
        if self.doc_prefix_len == 0 {
            return Err(Error::Config("doc_prefix_len must be >= 1".into()));
        }
        Ok(())
    }
}

/// `ln(1 + (N - df + 0.5) / (df + 0.5))`; non-negative and non-increasing
/// in document frequency.
pub fn idf(n_docs: u64, df: u64) -> f64 {
    (1.0 + (n_docs as f64 - df as f64 + 0.5) / (df as f64 + 0.5)).ln()
}

fn term_score(tf: u32, doc_len: u32, avgdl: f64, params: &Bm25Params) -> f64 {
    let tf = tf as f64;
    let norm = 1.0 - params.b + params.b * doc_len as f64 / avgdl;
    tf * (params.k1 + 1.0) / (tf + params.k1 * norm)
}

/// Score one document against a query token sequence (no truncation applied
/// to the query here; `retrieve_topk` owns that policy).
pub fn bm25_score(
    query: &[u32],
    doc_id: &str,
    index: &InvertedIndex,
    params: &Bm25Params,
) -> Result<f64> {
    params.validate()?;
    let ordinal = index
        .ordinal(doc_id)
        .ok_or_else(|| Error::Data(format!("unknown document id `{doc_id}`")))?;
    let terms: BTreeSet<u32> = query.iter().copied().collect();
    let dl = index.doc_len(ordinal);
    let mut score = 0.0;
    for term in terms {
        if let Some(postings) = index.postings(term) {
            if let Ok(pos) = postings.binary_search_by_key(&ordinal, |p| p.doc) {
                let tf = postings[pos].tf;
                score += idf(index.n_docs(), postings.len() as u64)
                    * term_score(tf, dl, index.avgdl(), params);
            }
        }
    }
    Ok(score)
}

/// Retrieve the top-K candidates for a query document.
///
/// The query is represented by its first `doc_prefix_len` tokens, mirroring
/// the document-side truncation the index applied. When `pool` is given,
/// scoring is restricted to pool members; otherwise the whole corpus is
/// scored except the query document itself. Ties break by ascending doc id.
pub fn retrieve_topk(
    query: &Document,
    k: usize,
    index: &InvertedIndex,
    params: &Bm25Params,
    pool: Option<&[String]>,
) -> Result<Vec<(String, f64)>> {
    params.validate()?;
    if k == 0 {
        return Err(Error::Config("K must be >= 1".into()));
    }
    let prefix_len = index.doc_prefix_len().min(query.tokens.len());
    let query_terms: BTreeSet<u32> = query.tokens[..prefix_len].iter().copied().collect();

    let scope: Vec<u32> = match pool {
        Some(pool) => {
            let mut ordinals = Vec::with_capacity(pool.len());
            for doc_id in pool {
                let ordinal = index.ordinal(doc_id).ok_or_else(|| {
                    Error::Data(format!("pool document `{doc_id}` is not in the index"))
                })?;
                ordinals.push(ordinal);
            }
            ordinals.sort_unstable();
            ordinals
        }
        None => (0..index.n_docs() as u32)
            .filter(|&o| index.doc_id(o) != query.id)
            .collect(),
    };

    // Term-at-a-time accumulation; per-document addition order equals the
    // sorted term order, so scores are bit-identical to `bm25_score`.
    let mut scores: Vec<f64> = vec![0.0; index.n_docs() as usize];
    let in_scope: Vec<bool> = {
        let mut mask = vec![false; index.n_docs() as usize];
        for &o in &scope {
            mask[o as usize] = true;
        }
        mask
    };
    for &term in &query_terms {
        if let Some(postings) = index.postings(term) {
            let term_idf = idf(index.n_docs(), postings.len() as u64);
            for p in postings {
                if in_scope[p.doc as usize] {
                    scores[p.doc as usize] +=
                        term_idf * term_score(p.tf, index.doc_len(p.doc), index.avgdl(), params);
                }
            }
        }
    }

    let mut ranked: Vec<(String, f64)> = scope
        .iter()
        .map(|&o| (index.doc_id(o).to_string(), scores[o as usize]))
        .collect();
    ranked.sort_unstable_by(|a, b| {
        b.1.partial_cmp(&a.1)
            .expect("BM25 scores are finite")
            .then_with(|| a.0.cmp(&b.0))
    });
    ranked.truncate(k);
    Ok(ranked)
}

/// Micro-averaged recall@K: `sum_q |topK(q) ∩ rel(q)| / sum_q |rel(q)|`.
/// Queries without relevant documents are excluded from both sums.
pub fn recall_at_k(run: &RetrievalRun, qrels: &QrelSet, k: usize) -> Result<f64> {
    let mut hits = 0usize;
    let mut total = 0usize;
    for (query_id, ranking) in run.iter() {
        let Some(relevant) = qrels.relevant(query_id) else {
            continue;
        };
        if relevant.is_empty() {
            continue;
        }
        total += relevant.len();
        hits += ranking
            .iter()
            .take(k)
            .filter(|(doc, _)| relevant.contains(doc))
            .count();
    }
    if total == 0 {
        return Err(Error::Data(
            "recall is undefined: no query in the run has relevant documents".into(),
        ));
    }
    Ok(hits as f64 / total as f64)
}

/// Build a training pool of exactly `target_size` candidates per query: all
/// gold-relevant documents plus non-relevant documents sampled from the BM25
/// ranking (fewer when the ranking cannot fill the target).
pub fn augment_training_pool(
    run: &RetrievalRun,
    qrels: &QrelSet,
    target_size: usize,
    seed: u64,
) -> Result<CandidatePool> {
    if target_size == 0 {
        return Err(Error::Config("target_size must be >= 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = CandidatePool::new();
    for (query_id, ranking) in run.iter() {
        let relevant: Vec<String> = qrels
            .relevant(query_id)
            .map(|r| r.iter().cloned().collect())
            .unwrap_or_default();
        if relevant.len() > target_size {
            return Err(Error::Data(format!(
                "query `{query_id}` has {} relevant documents, more than target_size {target_size}",
                relevant.len()
            )));
        }
        let negatives: Vec<&String> = ranking
            .iter()
            .map(|(doc, _)| doc)
            .filter(|doc| !relevant.contains(doc))
            .collect();
        let need = (target_size - relevant.len()).min(negatives.len());
        let mut picked = rand::seq::index::sample(&mut rng, negatives.len(), need).into_vec();
        picked.sort_unstable();
        for doc in &relevant {
            pool.push(query_id.clone(), doc.clone())?;
        }
        for i in picked {
            pool.push(query_id.clone(), negatives[i].clone())?;
        }
    }
    Ok(pool)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{Document, Vocabulary};

    pub(crate) fn make_docs(texts: &[(&str, &str)]) -> (Vec<Document>, Vocabulary) {
        let vocab = Vocabulary::build(texts.iter().map(|(_, t)| *t), true);
        let docs = texts
            .iter()
            .map(|(id, text)| Document::from_text(*id, *text, &vocab, true, 256).unwrap())
            .collect();
        (docs, vocab)
    }

    #[test]
    fn disjoint_vocab_gives_singleton_postings() {
        let (docs, _) = make_docs(&[("d1", "alpha beta"), ("d2", "gamma delta")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        for term in index.terms() {
            assert_eq!(index.postings(term).unwrap().len(), 1);
        }
    }

    #[test]
    fn absent_term_contributes_zero() {
        let (docs, vocab) = make_docs(&[("d1", "alpha beta"), ("d2", "gamma delta")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let query = vec![vocab.id("gamma")];
        assert_eq!(bm25_score(&query, "d1", &index, &Bm25Params::default()).unwrap(), 0.0);
        assert!(bm25_score(&query, "d2", &index, &Bm25Params::default()).unwrap() > 0.0);
    }

    #[test]
    fn single_term_score_matches_hand_formula() {
        // tf=1, dl=avgdl, df=1, N=2: idf * 1.9/1.9 = ln(1 + 1.5/1.5) = ln 2.
        let (docs, vocab) = make_docs(&[("d1", "alpha beta"), ("d2", "gamma delta")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let score = bm25_score(&[vocab.id("alpha")], "d1", &index, &Bm25Params::default()).unwrap();
        assert!((score - 2.0f64.ln()).abs() < 1e-12, "score = {score}");
    }

    #[test]
    fn score_is_monotone_in_tf() {
        let (docs, vocab) = make_docs(&[
            ("d1", "alpha x y z"),
            ("d2", "alpha alpha y z"),
            ("d3", "alpha alpha alpha z"),
        ]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let params = Bm25Params::default();
        let q = vec![vocab.id("alpha")];
        let s1 = bm25_score(&q, "d1", &index, &params).unwrap();
        let s2 = bm25_score(&q, "d2", &index, &params).unwrap();
        let s3 = bm25_score(&q, "d3", &index, &params).unwrap();
        assert!(s1 < s2 && s2 < s3);
    }

    #[test]
    fn unknown_doc_is_an_error() {
        let (docs, _) = make_docs(&[("d1", "alpha")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        assert!(bm25_score(&[5], "nope", &index, &Bm25Params::default()).is_err());
    }

    #[test]
    fn idf_is_nonnegative_and_nonincreasing() {
        let mut prev = f64::INFINITY;
        for df in 1..=100 {
            let v = idf(100, df);
            assert!(v >= 0.0);
            assert!(v <= prev);
            prev = v;
        }
    }

    #[test]
    fn topk_larger_than_corpus_returns_everything() {
        let (docs, _) = make_docs(&[("d1", "alpha beta"), ("d2", "alpha gamma"), ("q", "alpha")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let query = docs.iter().find(|d| d.id == "q").unwrap();
        let ranked =
            retrieve_topk(query, 100, &index, &Bm25Params::default(), None).unwrap();
        // the query document itself is excluded
        assert_eq!(ranked.len(), 2);
    }

    #[test]
    fn ties_break_by_ascending_doc_id() {
        let (docs, _) = make_docs(&[("dz", "alpha beta"), ("da", "alpha beta"), ("q", "alpha")]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let query = docs.iter().find(|d| d.id == "q").unwrap();
        let ranked = retrieve_topk(query, 2, &index, &Bm25Params::default(), None).unwrap();
        assert_eq!(ranked[0].0, "da");
        assert_eq!(ranked[1].0, "dz");
        assert_eq!(ranked[0].1, ranked[1].1);
    }

    #[test]
    fn pool_restriction_excludes_other_docs() {
        let (docs, _) = make_docs(&[
            ("d1", "alpha beta"),
            ("d2", "alpha beta"),
            ("q", "alpha beta"),
        ]);
        let index = build_index(&docs, &Bm25Params::default()).unwrap();
        let query = docs.iter().find(|d| d.id == "q").unwrap();
        let pool = vec!["d2".to_string()];
        let ranked =
            retrieve_topk(query, 10, &index, &Bm25Params::default(), Some(&pool)).unwrap();
        assert_eq!(ranked.len(), 1);
        assert_eq!(ranked[0].0, "d2");
    }

    #[test]
    fn recall_counts_match_hand_tally() {
        // 3 queries: q1 has 2 relevant with 1 retrieved in top-2, q2 has 1
        // relevant retrieved, q3 has 1 relevant not retrieved → 2 / 4.
        let mut run = RetrievalRun::new();
        run.insert_ranking("q1", vec![("a".into(), 3.0), ("x".into(), 2.0)]).unwrap();
        run.insert_ranking("q2", vec![("b".into(), 1.0)]).unwrap();
        run.insert_ranking("q3", vec![("y".into(), 1.0)]).unwrap();
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "a");
        qrels.insert("q1", "c");
        qrels.insert("q2", "b");
        qrels.insert("q3", "z");
        let recall = recall_at_k(&run, &qrels, 2).unwrap();
        assert!((recall - 0.5).abs() < 1e-12);
    }

    #[test]
    fn recall_is_monotone_in_k() {
        let mut run = RetrievalRun::new();
        run.insert_ranking(
            "q1",
            vec![("a".into(), 5.0), ("b".into(), 4.0), ("c".into(), 3.0)],
        )
        .unwrap();
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "b");
        qrels.insert("q1", "c");
        let mut prev = 0.0;
        for k in 1..=4 {
            let r = recall_at_k(&run, &qrels, k).unwrap();
            assert!(r >= prev);
            prev = r;
        }
        assert!((prev - 1.0).abs() < 1e-12);
    }

    #[test]
    fn augment_contains_all_relevant_plus_sampled_negatives() {
        let mut run = RetrievalRun::new();
        let ranking: Vec<(String, f64)> =
            (0..30).map(|i| (format!("d{i:02}"), 30.0 - i as f64)).collect();
        run.insert_ranking("q1", ranking).unwrap();
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "d05");
        qrels.insert("q1", "d99"); // relevant but missed by retrieval
        qrels.insert("q1", "d11");
        let pool = augment_training_pool(&run, &qrels, 20, 9).unwrap();
        let cands = pool.candidates("q1").unwrap();
        assert_eq!(cands.len(), 20);
        for doc in ["d05", "d99", "d11"] {
            assert!(cands.contains(&doc.to_string()));
        }
        let again = augment_training_pool(&run, &qrels, 20, 9).unwrap();
        assert_eq!(pool, again);
        let different = augment_training_pool(&run, &qrels, 20, 10).unwrap();
        assert_ne!(pool, different);
    }

    #[test]
    fn augment_without_relevant_samples_target_size() {
        let mut run = RetrievalRun::new();
        let ranking: Vec<(String, f64)> =
            (0..25).map(|i| (format!("d{i:02}"), 25.0 - i as f64)).collect();
        run.insert_ranking("q1", ranking).unwrap();
        let qrels = QrelSet::new();
        let pool = augment_training_pool(&run, &qrels, 20, 1).unwrap();
        assert_eq!(pool.candidates("q1").unwrap().len(), 20);
    }

    #[test]
    fn augment_rejects_overfull_relevant_set() {
        let mut run = RetrievalRun::new();
        run.insert_ranking("q1", vec![("d1".into(), 1.0)]).unwrap();
        let mut qrels = QrelSet::new();
        for i in 0..5 {
            qrels.insert("q1", format!("r{i}"));
        }
        let err = augment_training_pool(&run, &qrels, 3, 0).unwrap_err();
        assert!(err.to_string().contains("q1"));
    }
}
