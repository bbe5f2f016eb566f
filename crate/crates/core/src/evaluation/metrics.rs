//! Pooled binary classification metrics.
//!
//! The evaluation universe is every (query, candidate) pair of the full
//! candidate pools. Pairs without an explicit decision count as
//! predicted-irrelevant: a first stage that only ranks the top K of a 200
//! candidate pool implicitly classifies the remaining candidates negative.
//! Metrics are micro-pooled over all pairs of all queries.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::aggregator::Prediction;
use crate::bm25::RetrievalRun;
use crate::corpus::{CandidatePool, QrelSet};
use crate::error::{Error, Result};

/// Explicit binary decisions per (query, candidate) pair.
pub type Decisions = BTreeMap<String, BTreeMap<String, bool>>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CutoffConfig {
    pub cutoff: usize,
}

impl Default for CutoffConfig {
    fn default() -> Self {
        CutoffConfig { cutoff: 5 }
    }
}

/// Pooled precision/recall/F1 with the underlying confusion counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: u64,
    pub fp: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
    pub tn: u64,
    pub total_pairs: u64,
}

impl EvalReport {
    fn from_counts(tp: u64, fp: u64, fn_: u64, tn: u64) -> EvalReport {
        let precision = if tp + fp > 0 {
            tp as f64 / (tp + fp) as f64
        } else {
            0.0
        };
        let recall = if tp + fn_ > 0 {
            tp as f64 / (tp + fn_) as f64
        } else {
            0.0
        };
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            0.0
        };
        EvalReport {
            precision,
            recall,
            f1,
            tp,
            fp,
            fn_,
            tn,
            total_pairs: tp + fp + fn_ + tn,
        }
    }
}

fn check_decisions(decisions: &Decisions, pools: &CandidatePool) -> Result<()> {
    for (query_id, docs) in decisions {
        let pool = pools.candidates(query_id).ok_or_else(|| {
            Error::Data(format!("decisions reference unknown query `{query_id}`"))
        })?;
        for doc_id in docs.keys() {
            if !pool.contains(doc_id) {
                return Err(Error::Data(format!(
                    "decision for pair ({query_id}, {doc_id}) is outside the candidate pool"
                )));
            }
        }
    }
    Ok(())
}

/// Micro-pooled metrics over every pool pair; pairs without an explicit
/// decision are counted as predicted-irrelevant.
pub fn pooled_binary_metrics(
    decisions: &Decisions,
    qrels: &QrelSet,
    pools: &CandidatePool,
) -> Result<EvalReport> {
    check_decisions(decisions, pools)?;
    let (mut tp, mut fp, mut fn_, mut tn) = (0u64, 0u64, 0u64, 0u64);
    for (query_id, pool) in pools.iter() {
        if let Some(relevant) = qrels.relevant(query_id) {
            for doc in relevant {
                if !pool.contains(doc) {
                    return Err(Error::Data(format!(
                        "relevant document `{doc}` for query `{query_id}` is missing from the \
                         evaluation pool; evaluate against the full pools"
                    )));
                }
            }
        }
        let decided = decisions.get(query_id);
        for doc_id in pool {
            let predicted = decided
                .and_then(|d| d.get(doc_id))
                .copied()
                .unwrap_or(false);
            let relevant = qrels.is_relevant(query_id, doc_id);
            match (predicted, relevant) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => tn += 1,
            }
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

/// Turn a ranking into decisions: the top `cutoff` documents of each query
/// are predicted relevant, everything else irrelevant.
pub fn decisions_from_cutoff(run: &RetrievalRun, cfg: &CutoffConfig) -> Decisions {
    let mut decisions = Decisions::new();
    for (query_id, ranking) in run.iter() {
        let entry = decisions.entry(query_id.clone()).or_default();
        for (rank0, (doc_id, _)) in ranking.iter().enumerate() {
            entry.insert(doc_id.clone(), rank0 < cfg.cutoff);
        }
    }
    decisions
}

/// Decisions from per-query aggregator predictions; candidates never encoded
/// stay absent and default to irrelevant in the pooled metrics.
pub fn decisions_from_predictions(
    predictions: &BTreeMap<String, Vec<Prediction>>,
) -> Decisions {
    let mut decisions = Decisions::new();
    for (query_id, preds) in predictions {
        let entry = decisions.entry(query_id.clone()).or_default();
        for p in preds {
            entry.insert(p.cand_id.clone(), p.relevant);
        }
    }
    decisions
}

/// Cutoff-based ranking evaluation (the first-stage baseline): top-c
/// predicted relevant, delegated to [`pooled_binary_metrics`].
pub fn cutoff_evaluate(
    run: &RetrievalRun,
    qrels: &QrelSet,
    cfg: &CutoffConfig,
    pools: &CandidatePool,
) -> Result<EvalReport> {
    if cfg.cutoff == 0 {
        return Err(Error::Config("cutoff must be >= 1".into()));
    }
    pooled_binary_metrics(&decisions_from_cutoff(run, cfg), qrels, pools)
}

/// Per-query F1 (the paired t-test samples). A query with no relevant
/// documents and no predicted positives scores `degenerate_value`
/// (convention: 1.0).
pub fn per_query_f1(
    decisions: &Decisions,
    qrels: &QrelSet,
    pools: &CandidatePool,
    degenerate_value: f64,
) -> Result<BTreeMap<String, f64>> {
    check_decisions(decisions, pools)?;
    let mut out = BTreeMap::new();
    for (query_id, pool) in pools.iter() {
        let decided = decisions.get(query_id);
        let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
        for doc_id in pool {
            let predicted = decided
                .and_then(|d| d.get(doc_id))
                .copied()
                .unwrap_or(false);
            let relevant = qrels.is_relevant(query_id, doc_id);
            match (predicted, relevant) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        let f1 = if tp + fp + fn_ == 0 {
            degenerate_value
        } else {
            EvalReport::from_counts(tp, fp, fn_, 0).f1
        };
        out.insert(query_id.clone(), f1);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pool_of(query: &str, docs: &[&str]) -> CandidatePool {
        let mut pool = CandidatePool::new();
        for d in docs {
            pool.push(query, *d).unwrap();
        }
        pool
    }

    fn decide(query: &str, docs: &[(&str, bool)]) -> Decisions {
        let mut decisions = Decisions::new();
        let entry = decisions.entry(query.into()).or_default();
        for (d, v) in docs {
            entry.insert(d.to_string(), *v);
        }
        decisions
    }

    #[test]
    fn perfect_decisions_score_one() {
        let pools = pool_of("q1", &["a", "b", "c", "d"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "a");
        qrels.insert("q1", "c");
        let decisions = decide("q1", &[("a", true), ("c", true)]);
        let report = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (1.0, 1.0, 1.0));
        assert_eq!((report.tp, report.fp, report.fn_, report.tn), (2, 0, 0, 2));
        assert_eq!(report.total_pairs, 4);
    }

    #[test]
    fn hand_confusion_matrix_two_queries() {
        // tp=3, fp=1, fn=2 → P=0.75, R=0.6, F1≈0.6667.
        let mut pools = pool_of("q1", &["a", "b", "c", "d"]);
        for d in ["e", "f", "g", "h"] {
            pools.push("q2", d).unwrap();
        }
        let mut qrels = QrelSet::new();
        for (q, d) in [("q1", "a"), ("q1", "b"), ("q1", "c"), ("q2", "e"), ("q2", "f")] {
            qrels.insert(q, d);
        }
        let mut decisions = decide("q1", &[("a", true), ("b", true), ("d", true)]);
        decisions
            .entry("q2".into())
            .or_default()
            .insert("e".into(), true);
        let report = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap();
        assert_eq!((report.tp, report.fp, report.fn_), (3, 1, 2));
        assert!((report.precision - 0.75).abs() < 1e-12);
        assert!((report.recall - 0.6).abs() < 1e-12);
        assert!((report.f1 - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn unscored_relevant_candidate_counts_as_fn() {
        // The relevant doc is in the pool but got no explicit decision
        // (outside the scored top-K): predicted-irrelevant → fn.
        let pools = pool_of("q1", &["a", "b", "c"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "c");
        let decisions = decide("q1", &[("a", true), ("b", false)]);
        let report = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap();
        assert_eq!((report.tp, report.fp, report.fn_, report.tn), (0, 1, 1, 1));
    }

    #[test]
    fn decision_outside_pool_is_an_error() {
        let pools = pool_of("q1", &["a"]);
        let qrels = QrelSet::new();
        let decisions = decide("q1", &[("zzz", true)]);
        let err = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap_err();
        assert!(err.to_string().contains("outside the candidate pool"));
    }

    #[test]
    fn counts_satisfy_marginal_identities() {
        let pools = pool_of("q1", &["a", "b", "c", "d", "e"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "a");
        qrels.insert("q1", "b");
        let decisions = decide("q1", &[("b", true), ("c", true), ("d", true)]);
        let r = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap();
        assert_eq!(r.tp + r.fn_, 2); // total relevant pairs
        assert_eq!(r.tp + r.fp, 3); // total predicted-relevant pairs
        assert_eq!(r.total_pairs, 5);
    }

    #[test]
    fn cutoff_covering_whole_pool_has_full_recall() {
        let pools = pool_of("q1", &["a", "b", "c"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "b");
        let mut run = RetrievalRun::new();
        run.insert_ranking(
            "q1",
            vec![("a".into(), 3.0), ("b".into(), 2.0), ("c".into(), 1.0)],
        )
        .unwrap();
        let report =
            cutoff_evaluate(&run, &qrels, &CutoffConfig { cutoff: 3 }, &pools).unwrap();
        assert_eq!(report.recall, 1.0);
    }

    #[test]
    fn cutoff_five_with_five_relevant_in_top_is_perfect() {
        let docs: Vec<String> = (0..200).map(|i| format!("d{i:03}")).collect();
        let mut pools = CandidatePool::new();
        for d in &docs {
            pools.push("q1", d.clone()).unwrap();
        }
        let mut qrels = QrelSet::new();
        for d in docs.iter().take(5) {
            qrels.insert("q1", d.clone());
        }
        let mut run = RetrievalRun::new();
        run.insert_ranking(
            "q1",
            docs.iter()
                .enumerate()
                .map(|(i, d)| (d.clone(), 200.0 - i as f64))
                .collect(),
        )
        .unwrap();
        let report =
            cutoff_evaluate(&run, &qrels, &CutoffConfig::default(), &pools).unwrap();
        assert_eq!((report.precision, report.recall, report.f1), (1.0, 1.0, 1.0));
        assert_eq!(report.total_pairs, 200);
    }

    #[test]
    fn cutoff_recall_is_monotone() {
        let pools = pool_of("q1", &["a", "b", "c", "d"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "c");
        qrels.insert("q1", "d");
        let mut run = RetrievalRun::new();
        run.insert_ranking(
            "q1",
            vec![
                ("a".into(), 4.0),
                ("c".into(), 3.0),
                ("b".into(), 2.0),
                ("d".into(), 1.0),
            ],
        )
        .unwrap();
        let mut prev = 0.0;
        for c in 1..=4 {
            let r = cutoff_evaluate(&run, &qrels, &CutoffConfig { cutoff: c }, &pools).unwrap();
            assert!(r.recall >= prev);
            prev = r.recall;
        }
    }

    #[test]
    fn per_query_f1_matches_manual_tally() {
        // q1 perfect, q2 all wrong, q3 degenerate, q4 mixed (tp=1, fp=1, fn=1).
        let mut pools = pool_of("q1", &["a", "b"]);
        for (q, d) in [
            ("q2", "a"),
            ("q2", "b"),
            ("q3", "a"),
            ("q4", "a"),
            ("q4", "b"),
            ("q4", "c"),
        ] {
            pools.push(q, d).unwrap();
        }
        let mut qrels = QrelSet::new();
        for (q, d) in [("q1", "a"), ("q2", "a"), ("q4", "a"), ("q4", "b")] {
            qrels.insert(q, d);
        }
        let mut decisions = decide("q1", &[("a", true)]);
        decisions
            .entry("q2".into())
            .or_default()
            .insert("b".into(), true);
        let e4 = decisions.entry("q4".into()).or_default();
        e4.insert("a".into(), true);
        e4.insert("c".into(), true);
        let f1 = per_query_f1(&decisions, &qrels, &pools, 1.0).unwrap();
        assert_eq!(f1["q1"], 1.0);
        assert_eq!(f1["q2"], 0.0);
        assert_eq!(f1["q3"], 1.0); // no relevant, no predicted → convention
        assert!((f1["q4"] - 0.5).abs() < 1e-12);
    }

    #[test]
    fn single_query_reduces_to_pooled_metrics() {
        let pools = pool_of("q1", &["a", "b", "c"]);
        let mut qrels = QrelSet::new();
        qrels.insert("q1", "a");
        let decisions = decide("q1", &[("a", true), ("b", true)]);
        let pooled = pooled_binary_metrics(&decisions, &qrels, &pools).unwrap();
        let per_query = per_query_f1(&decisions, &qrels, &pools, 1.0).unwrap();
        assert!((pooled.f1 - per_query["q1"]).abs() < 1e-12);
    }
}
