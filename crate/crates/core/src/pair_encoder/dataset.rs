//! Stage-1 training examples and negative-sampling strategies.
//!
//! `AllPoolNonRelevant` turns every non-relevant pool paragraph into a
//! negative (legal-style: ~3% positives when pools average ~32 paragraphs
//! with one relevant). `RandomKPerPositive` samples exactly `k` negatives per
//! positive from the paragraphs of documents that contain a relevant
//! paragraph, excluding the relevant paragraphs themselves (patent-style).

use std::collections::BTreeMap;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{truncate_pair_symmetric, Document, ParaRef, ParagraphTask};
use crate::error::{Error, Result};

/// One encoder training pair; the token sequences already respect the
/// symmetric truncation budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct Stage1Example {
    pub task_id: String,
    pub query: Vec<u32>,
    pub candidate: Vec<u32>,
    pub label: u8,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SamplingKind {
    AllPoolNonRelevant,
    RandomKPerPositive,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct NegativeSamplingStrategy {
    pub kind: SamplingKind,
    /// Negatives per positive (RandomKPerPositive only).
    pub k: usize,
    pub seed: u64,
}

impl Default for NegativeSamplingStrategy {
    fn default() -> Self {
        NegativeSamplingStrategy {
            kind: SamplingKind::AllPoolNonRelevant,
            k: 5,
            seed: 0,
        }
    }
}

/// Resolves paragraph references against a tokenized corpus.
pub struct CorpusIndex<'a> {
    docs: BTreeMap<&'a str, &'a Document>,
}

impl<'a> CorpusIndex<'a> {
    pub fn from_documents(docs: &'a [Document]) -> Self {
        CorpusIndex {
            docs: docs.iter().map(|d| (d.id.as_str(), d)).collect(),
        }
    }

    pub fn document(&self, doc_id: &str) -> Result<&'a Document> {
        self.docs
            .get(doc_id)
            .copied()
            .ok_or_else(|| Error::Data(format!("unknown document id `{doc_id}`")))
    }

    pub fn paragraph(&self, para: &ParaRef) -> Result<&'a [u32]> {
        let doc = self.document(&para.doc_id)?;
        doc.paragraphs
            .get(para.para_index)
            .map(|p| p.tokens.as_slice())
            .ok_or_else(|| {
                Error::Data(format!(
                    "document `{}` has no paragraph {} ({} available)",
                    para.doc_id,
                    para.para_index,
                    doc.paragraphs.len()
                ))
            })
    }
}

/// Build the stage-1 dataset for a set of paragraph tasks. Deterministic for
/// a fixed strategy (seed included).
pub fn build_stage1_dataset(
    tasks: &[ParagraphTask],
    corpus: &CorpusIndex,
    strategy: &NegativeSamplingStrategy,
    max_pair_tokens: usize,
) -> Result<Vec<Stage1Example>> {
    if strategy.kind == SamplingKind::RandomKPerPositive && strategy.k == 0 {
        return Err(Error::Config("k must be >= 1 for RandomKPerPositive".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(strategy.seed);
    let mut examples = Vec::new();

    for task in tasks {
        let query_tokens = corpus.paragraph(&task.query)?;
        for rel in &task.relevant {
            if !task.pool.contains(rel) {
                return Err(Error::Data(format!(
                    "task `{}` marks `{rel}` relevant but it is not in the pool",
                    task.query_id
                )));
            }
        }
        let push = |examples: &mut Vec<Stage1Example>, cand: &ParaRef, label: u8| -> Result<()> {
            let cand_tokens = corpus.paragraph(cand)?;
            let (q, c) = truncate_pair_symmetric(query_tokens, cand_tokens, max_pair_tokens)?;
            examples.push(Stage1Example {
                task_id: task.query_id.clone(),
                query: q,
                candidate: c,
                label,
            });
            Ok(())
        };

        match strategy.kind {
            SamplingKind::AllPoolNonRelevant => {
                for cand in &task.pool {
                    let label = u8::from(task.relevant.contains(cand));
                    push(&mut examples, cand, label)?;
                }
            }
            SamplingKind::RandomKPerPositive => {
                // Negative universe: all paragraphs of documents containing a
                // relevant paragraph, minus the relevant paragraphs.
                let rel_docs: std::collections::BTreeSet<&str> =
                    task.relevant.iter().map(|r| r.doc_id.as_str()).collect();
                let mut universe: Vec<ParaRef> = Vec::new();
                for doc_id in rel_docs {
                    let doc = corpus.document(doc_id)?;
                    for p in 0..doc.paragraphs.len() {
                        let para = ParaRef::new(doc_id, p);
                        if !task.relevant.contains(&para) {
                            universe.push(para);
                        }
                    }
                }
                for rel in &task.relevant {
                    if universe.len() < strategy.k {
                        return Err(Error::Data(format!(
                            "task `{}`: cannot sample {} negatives without replacement \
                             from {} available paragraphs",
                            task.query_id,
                            strategy.k,
                            universe.len()
                        )));
                    }
                    push(&mut examples, rel, 1)?;
                    let picked =
                        rand::seq::index::sample(&mut rng, universe.len(), strategy.k);
                    for idx in picked.iter() {
                        let cand = universe[idx].clone();
                        push(&mut examples, &cand, 0)?;
                    }
                }
            }
        }
    }
    Ok(examples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;

    fn corpus_with(paras_per_doc: &[(&str, usize)], para_len: usize) -> Vec<Document> {
        // Each paragraph is `para_len` copies of a unique word.
        let mut texts = Vec::new();
        for (id, n_paras) in paras_per_doc {
            let mut words = Vec::new();
            for p in 0..*n_paras {
                let word = format!("{id}p{p}");
                words.extend(std::iter::repeat(word).take(para_len));
            }
            texts.push((id.to_string(), words.join(" ")));
        }
        let vocab = Vocabulary::build(texts.iter().map(|(_, t)| t.as_str()), true);
        texts
            .iter()
            .map(|(id, text)| Document::from_text(id, text, &vocab, true, para_len).unwrap())
            .collect()
    }

    fn task(query: &str, pool: Vec<ParaRef>, relevant: Vec<ParaRef>) -> ParagraphTask {
        ParagraphTask {
            query_id: format!("{query}#0"),
            query: ParaRef::new(query, 0),
            pool,
            relevant: relevant.into_iter().collect(),
        }
    }

    #[test]
    fn all_pool_emits_one_example_per_pool_paragraph() {
        // 33-paragraph pool with one relevant: 1 positive + 32 negatives,
        // ~3% positive fraction.
        let mut spec: Vec<(&str, usize)> = vec![("q", 1), ("rel", 1)];
        let fillers: Vec<String> = (0..32).map(|i| format!("f{i:02}")).collect();
        for f in &fillers {
            spec.push((f.as_str(), 1));
        }
        let docs = corpus_with(&spec, 8);
        let corpus = CorpusIndex::from_documents(&docs);
        let mut pool = vec![ParaRef::new("rel", 0)];
        pool.extend(fillers.iter().map(|f| ParaRef::new(f.clone(), 0)));
        let t = task("q", pool, vec![ParaRef::new("rel", 0)]);
        let strategy = NegativeSamplingStrategy::default();
        let examples = build_stage1_dataset(&[t], &corpus, &strategy, 512).unwrap();
        assert_eq!(examples.len(), 33);
        let positives = examples.iter().filter(|e| e.label == 1).count();
        assert_eq!(positives, 1);
        let fraction = positives as f64 / examples.len() as f64;
        assert!(fraction > 0.02 && fraction < 0.05);
    }

    #[test]
    fn random_k_emits_exactly_k_negatives_per_positive() {
        // 4 positives, k=5 → exactly 20 negatives.
        let docs = corpus_with(&[("q", 1), ("a", 7), ("b", 7), ("c", 7), ("d", 7)], 4);
        let corpus = CorpusIndex::from_documents(&docs);
        let relevant = vec![
            ParaRef::new("a", 0),
            ParaRef::new("b", 0),
            ParaRef::new("c", 0),
            ParaRef::new("d", 0),
        ];
        let t = task("q", relevant.clone(), relevant);
        let strategy = NegativeSamplingStrategy {
            kind: SamplingKind::RandomKPerPositive,
            k: 5,
            seed: 3,
        };
        let examples = build_stage1_dataset(&[t], &corpus, &strategy, 512).unwrap();
        let positives = examples.iter().filter(|e| e.label == 1).count();
        let negatives = examples.iter().filter(|e| e.label == 0).count();
        assert_eq!(positives, 4);
        assert_eq!(negatives, 20);
    }

    #[test]
    fn random_k_with_insufficient_negatives_is_an_error() {
        // Single relevant doc with 2 paragraphs → only 1 candidate negative.
        let docs = corpus_with(&[("q", 1), ("a", 2)], 4);
        let corpus = CorpusIndex::from_documents(&docs);
        let t = task("q", vec![ParaRef::new("a", 0)], vec![ParaRef::new("a", 0)]);
        let strategy = NegativeSamplingStrategy {
            kind: SamplingKind::RandomKPerPositive,
            k: 5,
            seed: 0,
        };
        let err = build_stage1_dataset(&[t], &corpus, &strategy, 512).unwrap_err();
        assert!(err.to_string().contains("without replacement"));
    }

    #[test]
    fn dataset_is_deterministic_per_seed() {
        let docs = corpus_with(&[("q", 1), ("a", 7), ("b", 7)], 4);
        let corpus = CorpusIndex::from_documents(&docs);
        let relevant = vec![ParaRef::new("a", 0), ParaRef::new("b", 0)];
        let t = task("q", relevant.clone(), relevant);
        let strategy = NegativeSamplingStrategy {
            kind: SamplingKind::RandomKPerPositive,
            k: 3,
            seed: 17,
        };
        let a = build_stage1_dataset(std::slice::from_ref(&t), &corpus, &strategy, 512).unwrap();
        let b = build_stage1_dataset(std::slice::from_ref(&t), &corpus, &strategy, 512).unwrap();
        assert_eq!(a, b);
        let other = NegativeSamplingStrategy { seed: 18, ..strategy };
        let c = build_stage1_dataset(&[t], &corpus, &other, 512).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn pairs_respect_truncation_budget() {
        let docs = corpus_with(&[("q", 2), ("a", 2)], 400);
        let corpus = CorpusIndex::from_documents(&docs);
        let t = task("q", vec![ParaRef::new("a", 0)], vec![ParaRef::new("a", 0)]);
        let examples =
            build_stage1_dataset(&[t], &corpus, &NegativeSamplingStrategy::default(), 512)
                .unwrap();
        for e in &examples {
            assert!(e.query.len() + e.candidate.len() <= 512 - 3);
        }
    }

    #[test]
    fn relevant_outside_pool_is_rejected() {
        let docs = corpus_with(&[("q", 1), ("a", 2), ("b", 1)], 4);
        let corpus = CorpusIndex::from_documents(&docs);
        let t = task("q", vec![ParaRef::new("b", 0)], vec![ParaRef::new("a", 0)]);
        assert!(
            build_stage1_dataset(&[t], &corpus, &NegativeSamplingStrategy::default(), 512)
                .is_err()
        );
    }
}
