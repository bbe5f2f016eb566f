//! The six-cell cross-domain transfer grid.
//!
//! Three pair encoders (the untrained base encoder, one fine-tuned per
//! domain) cross two aggregators (one trained per domain's retrieval task,
//! on the cell encoder's representations) give six models, each evaluated on
//! both domains' test sets. Cell labels follow the fixed assignment
//!
//! ```text
//! R1 = base encoder + A-RNN    R2 = base encoder + B-RNN
//! R3 = A encoder    + A-RNN    R4 = A encoder    + B-RNN
//! R5 = B encoder    + A-RNN    R6 = B encoder    + B-RNN
//! ```
//!
//! so with A = legal and B = patent, R3 is the in-domain legal result on the
//! legal test set. All encoders share one vocabulary built over both
//! corpora, mirroring how a pretrained model's vocabulary is domain
//! independent; the domain encoders start from the base encoder's initial
//! parameters.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use super::{
    cutoff_evaluate, decisions_from_cutoff, decisions_from_predictions, paired_t_test,
    per_query_f1, pooled_binary_metrics, CutoffConfig, EvalReport, SignificanceResult,
};
use crate::bm25::{augment_training_pool, build_index};
use crate::corpus::io::CorpusRecord;
use crate::corpus::synthetic::SyntheticBenchmark;
use crate::corpus::{CandidatePool, ParagraphTask, QrelSet, Vocabulary};
use crate::error::{Error, Result};
use crate::interaction::EncoderSource;
use crate::pair_encoder::{train_stage1, CorpusIndex, MicroEncoder};
use crate::pipeline::{
    encode_matrices, labeled_sequences, pool_from_run, predict_pools, retrieval_run,
    sequences_by_query, stage1_dataset, tasks_by_id, tokenize_corpus, PipelineConfig,
};

/// One domain's complete data, borrowed from the caller.
#[derive(Debug, Clone, Copy)]
pub struct DomainInputs<'a> {
    pub name: &'a str,
    pub records: &'a [CorpusRecord],
    pub qrels: &'a QrelSet,
    pub pools: &'a CandidatePool,
    pub para_tasks: &'a [ParagraphTask],
    /// Task ids of the paragraph collection's training split.
    pub para_train_tasks: &'a [String],
    /// Task ids of the paragraph collection's held-out split (used only when
    /// the merged stage-1 mode is on).
    pub para_test_tasks: &'a [String],
    pub train_queries: &'a [String],
    pub test_queries: &'a [String],
}

impl<'a> DomainInputs<'a> {
    pub fn from_benchmark(name: &'a str, bench: &'a SyntheticBenchmark) -> Self {
        DomainInputs {
            name,
            records: &bench.corpus,
            qrels: &bench.qrels,
            pools: &bench.pools,
            para_tasks: &bench.para_tasks,
            para_train_tasks: &bench.para_train_tasks,
            para_test_tasks: &bench.para_test_tasks,
            train_queries: &bench.train_queries,
            test_queries: &bench.test_queries,
        }
    }
}

/// One grid cell: an (encoder, aggregator) combination evaluated on one test
/// set, with significance against that test set's first-stage baseline.
#[derive(Debug, Clone, Serialize)]
pub struct GridCell {
    pub label: String,
    pub encoder: String,
    pub aggregator: String,
    pub report: EvalReport,
    pub significance: SignificanceResult,
    #[serde(skip)]
    pub per_query_f1: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct TestSetResults {
    pub test_domain: String,
    pub baseline: EvalReport,
    /// Exactly six cells, ordered R1..R6.
    pub cells: Vec<GridCell>,
    #[serde(skip)]
    pub baseline_per_query: BTreeMap<String, f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CrossDomainGrid {
    pub domain_a: String,
    pub domain_b: String,
    pub test_sets: Vec<TestSetResults>,
}

impl CrossDomainGrid {
    pub fn test_set(&self, domain: &str) -> Option<&TestSetResults> {
        self.test_sets.iter().find(|t| t.test_domain == domain)
    }
}

struct DomainState<'a> {
    inputs: DomainInputs<'a>,
    documents: Vec<crate::corpus::Document>,
    train_pool: CandidatePool,
    test_run: crate::bm25::RetrievalRun,
    test_encode_pool: CandidatePool,
    test_full_pools: CandidatePool,
    test_qrels: QrelSet,
}

/// Run the full cross-domain evaluation. `cfg.aggregator.cell` selects the
/// RNN cell used by every aggregator in the grid.
pub fn run_cross_domain_matrix(
    domain_a: &DomainInputs,
    domain_b: &DomainInputs,
    cfg: &PipelineConfig,
) -> Result<CrossDomainGrid> {
    cfg.validate()?;
    if domain_a.name == domain_b.name {
        return Err(Error::Config("the two domains must have distinct names".into()));
    }

    // One shared vocabulary over both corpora.
    let vocab = Vocabulary::build(
        domain_a
            .records
            .iter()
            .chain(domain_b.records.iter())
            .map(|r| r.text.as_str()),
        cfg.corpus.lowercase,
    );

    let mut states = Vec::new();
    for inputs in [domain_a, domain_b] {
        let documents = tokenize_corpus(inputs.records, &vocab, cfg)?;
        let state = {
            let docs = CorpusIndex::from_documents(&documents);
            let index = build_index(&documents, &cfg.bm25)?;
            let train_run =
                retrieval_run(inputs.train_queries, &docs, &index, cfg, Some(inputs.pools))?;
            let train_pool = augment_training_pool(
                &train_run,
                inputs.qrels,
                cfg.augment.target_size,
                cfg.augment.seed,
            )?;
            let test_run =
                retrieval_run(inputs.test_queries, &docs, &index, cfg, Some(inputs.pools))?;
            let test_encode_pool = pool_from_run(&test_run)?;
            let test_set: BTreeSet<String> = inputs.test_queries.iter().cloned().collect();
            DomainState {
                inputs: *inputs,
                train_pool,
                test_run,
                test_encode_pool,
                test_full_pools: inputs.pools.restrict_to(&test_set),
                test_qrels: inputs.qrels.restrict_to(&test_set),
                documents,
            }
        };
        states.push(state);
    }

    // The base encoder and one fine-tuned encoder per domain, both starting
    // from the base encoder's initial parameters.
    let base = MicroEncoder::init(cfg.encoder.config(vocab.size()))?;
    let mut encoders: Vec<(String, MicroEncoder)> = vec![("base".into(), base.clone())];
    for state in &states {
        let docs = CorpusIndex::from_documents(&state.documents);
        let mut para_train: BTreeSet<String> =
            state.inputs.para_train_tasks.iter().cloned().collect();
        if cfg.merge_paragraph_splits {
            para_train.extend(state.inputs.para_test_tasks.iter().cloned());
        }
        let tasks = tasks_by_id(state.inputs.para_tasks, &para_train);
        if tasks.is_empty() {
            return Err(Error::Data(format!(
                "domain `{}` has no paragraph tasks in its training split",
                state.inputs.name
            )));
        }
        let dataset = stage1_dataset(&tasks, &docs, cfg)?;
        let mut encoder = base.clone();
        train_stage1(&mut encoder, &dataset, &cfg.stage1)?;
        encoders.push((state.inputs.name.to_string(), encoder));
    }

    // Train one aggregator per (encoder, domain) and evaluate each model on
    // both test sets under the same encoder's representations.
    let cutoff = CutoffConfig {
        cutoff: cfg.evaluation.cutoff,
    };
    let mut test_sets: Vec<TestSetResults> = states
        .iter()
        .map(|state| {
            let baseline =
                cutoff_evaluate(&state.test_run, &state.test_qrels, &cutoff, &state.test_full_pools)?;
            let baseline_per_query = per_query_f1(
                &decisions_from_cutoff(&state.test_run, &cutoff),
                &state.test_qrels,
                &state.test_full_pools,
                cfg.evaluation.degenerate_f1,
            )?;
            Ok(TestSetResults {
                test_domain: state.inputs.name.to_string(),
                baseline,
                baseline_per_query,
                cells: Vec::new(),
            })
        })
        .collect::<Result<_>>()?;

    for (encoder_idx, (encoder_name, encoder)) in encoders.iter().enumerate() {
        let source = EncoderSource {
            encoder,
            max_pair_tokens: cfg.corpus.max_pair_tokens,
        };
        // Test-set encodings are shared by both aggregators of this encoder.
        let mut test_sequences = Vec::new();
        for state in &states {
            let docs = CorpusIndex::from_documents(&state.documents);
            let matrices =
                encode_matrices(&source, &docs, &state.test_encode_pool, &cfg.interaction)?;
            test_sequences.push(sequences_by_query(&matrices));
        }

        for (agg_idx, agg_state) in states.iter().enumerate() {
            let docs = CorpusIndex::from_documents(&agg_state.documents);
            let matrices =
                encode_matrices(&source, &docs, &agg_state.train_pool, &cfg.interaction)?;
            let train_data =
                labeled_sequences(&sequences_by_query(&matrices), agg_state.inputs.qrels);
            let (model, _) =
                crate::aggregator::train_aggregator(&train_data, &cfg.aggregator, None, None)?;

            let label = format!("R{}", encoder_idx * 2 + agg_idx + 1);
            for (test_idx, test_state) in states.iter().enumerate() {
                let predictions = predict_pools(&model, &test_sequences[test_idx])?;
                let decisions = decisions_from_predictions(&predictions);
                let report = pooled_binary_metrics(
                    &decisions,
                    &test_state.test_qrels,
                    &test_state.test_full_pools,
                )?;
                let cell_per_query = per_query_f1(
                    &decisions,
                    &test_state.test_qrels,
                    &test_state.test_full_pools,
                    cfg.evaluation.degenerate_f1,
                )?;
                let results = &mut test_sets[test_idx];
                let a: Vec<f64> = cell_per_query.values().copied().collect();
                let b: Vec<f64> = results.baseline_per_query.values().copied().collect();
                let significance = paired_t_test(&a, &b, cfg.evaluation.alpha)?;
                results.cells.push(GridCell {
                    label: label.clone(),
                    encoder: encoder_name.clone(),
                    aggregator: agg_state.inputs.name.to_string(),
                    report,
                    significance,
                    per_query_f1: cell_per_query,
                });
            }
        }
    }

    for results in &mut test_sets {
        results.cells.sort_by(|a, b| a.label.cmp(&b.label));
        debug_assert_eq!(results.cells.len(), 6);
    }

    Ok(CrossDomainGrid {
        domain_a: domain_a.name.to_string(),
        domain_b: domain_b.name.to_string(),
        test_sets,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::synthetic::{generate_synthetic_benchmark, small_config};

    fn grid_config() -> PipelineConfig {
        crate::pipeline::tests::fast_config()
    }

    #[test]
    fn grid_has_six_labeled_cells_per_test_set() {
        let bench_a = generate_synthetic_benchmark(&small_config(31)).unwrap();
        let bench_b = generate_synthetic_benchmark(&small_config(32)).unwrap();
        let a = DomainInputs::from_benchmark("law", &bench_a);
        let b = DomainInputs::from_benchmark("patent", &bench_b);
        let grid = run_cross_domain_matrix(&a, &b, &grid_config()).unwrap();
        assert_eq!(grid.test_sets.len(), 2);
        for results in &grid.test_sets {
            let labels: Vec<&str> = results.cells.iter().map(|c| c.label.as_str()).collect();
            assert_eq!(labels, vec!["R1", "R2", "R3", "R4", "R5", "R6"]);
            // Label ↔ (encoder, aggregator) bijection per the fixed layout.
            let expect = [
                ("base", "law"),
                ("base", "patent"),
                ("law", "law"),
                ("law", "patent"),
                ("patent", "law"),
                ("patent", "patent"),
            ];
            for (cell, (enc, agg)) in results.cells.iter().zip(expect) {
                assert_eq!(cell.encoder, enc, "{}", cell.label);
                assert_eq!(cell.aggregator, agg, "{}", cell.label);
            }
        }
    }

    #[test]
    fn identical_domains_produce_identical_cells() {
        // Domains A and B generated from one seed: in-domain and
        // cross-domain cells must agree exactly under shared seeds.
        let bench = generate_synthetic_benchmark(&small_config(33)).unwrap();
        let a = DomainInputs::from_benchmark("alpha", &bench);
        let b = DomainInputs::from_benchmark("beta", &bench);
        let grid = run_cross_domain_matrix(&a, &b, &grid_config()).unwrap();
        for results in &grid.test_sets {
            let f1: Vec<f64> = results.cells.iter().map(|c| c.report.f1).collect();
            // Same encoder, different aggregator domain → identical models.
            assert_eq!(f1[0], f1[1], "R1 vs R2");
            assert_eq!(f1[2], f1[3], "R3 vs R4");
            assert_eq!(f1[4], f1[5], "R5 vs R6");
            // Both domain encoders are the same model too.
            assert_eq!(f1[2], f1[4], "R3 vs R5");
        }
        // And the two test sets are the same data.
        assert_eq!(
            grid.test_sets[0].baseline.f1,
            grid.test_sets[1].baseline.f1
        );
    }

    #[test]
    fn grid_is_deterministic() {
        let bench_a = generate_synthetic_benchmark(&small_config(34)).unwrap();
        let bench_b = generate_synthetic_benchmark(&small_config(35)).unwrap();
        let a = DomainInputs::from_benchmark("a", &bench_a);
        let b = DomainInputs::from_benchmark("b", &bench_b);
        let g1 = run_cross_domain_matrix(&a, &b, &grid_config()).unwrap();
        let g2 = run_cross_domain_matrix(&a, &b, &grid_config()).unwrap();
        for (t1, t2) in g1.test_sets.iter().zip(&g2.test_sets) {
            assert_eq!(t1.baseline, t2.baseline);
            for (c1, c2) in t1.cells.iter().zip(&t2.cells) {
                assert_eq!(c1.report, c2.report);
            }
        }
    }
}
