//! Stage wiring: the glue that turns corpus files into trained models and
//! evaluation reports. The CLI subcommands, the cross-domain grid and the
//! acceptance tests are all thin layers over these functions, so every stage
//! boundary stays file-compatible and independently runnable.

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::aggregator::{
    predict_relevance, AggTrainingConfig, LabeledSequence, Prediction,
};
use crate::bm25::{build_index, retrieve_topk, Bm25Params, InvertedIndex, RetrievalRun};
use crate::corpus::io::CorpusRecord;
use crate::corpus::{
    CandidatePool, Document, ParagraphTask, QrelSet, Vocabulary, DEFAULT_MAX_PAIR_TOKENS,
    DEFAULT_PARAGRAPH_LEN,
};
use crate::error::{Error, Result};
use crate::evaluation::{
    cutoff_evaluate, decisions_from_cutoff, decisions_from_predictions, paired_t_test,
    per_query_f1, pooled_binary_metrics, CutoffConfig, EvalReport, SignificanceResult,
};
use crate::interaction::{
    build_matrices_for_query, maxpool_over_candidates, InteractionConfig, InteractionMatrix,
    PairRepresentationSource,
};
use crate::pair_encoder::{
    build_stage1_dataset, train_stage1, CorpusIndex, EncoderConfig, EpochLog, MicroEncoder,
    NegativeSamplingStrategy, Stage1Example, Stage1TrainConfig,
};

/// Structural encoder settings; the vocabulary size is data-dependent and
/// filled in when the encoder is created.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct EncoderSettings {
    pub d_embed: usize,
    pub d_repr: usize,
    pub seed: u64,
}

impl Default for EncoderSettings {
    fn default() -> Self {
        EncoderSettings {
            d_embed: 32,
            d_repr: 64,
            seed: 0,
        }
    }
}

impl EncoderSettings {
    pub fn config(&self, vocab_size: usize) -> EncoderConfig {
        EncoderConfig {
            d_embed: self.d_embed,
            d_repr: self.d_repr,
            vocab_size,
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct AugmentSettings {
    pub target_size: usize,
    pub seed: u64,
}

impl Default for AugmentSettings {
    fn default() -> Self {
        AugmentSettings {
            target_size: 20,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct EvaluationSettings {
    pub cutoff: usize,
    pub alpha: f64,
    /// Per-query F1 for a query with no relevant and no predicted documents.
    pub degenerate_f1: f64,
}

impl Default for EvaluationSettings {
    fn default() -> Self {
        EvaluationSettings {
            cutoff: 5,
            alpha: 0.05,
            degenerate_f1: 1.0,
        }
    }
}

/// The full pipeline configuration; every scalar has a default and maps to a
/// dotted override flag in the CLI.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case", default)]
pub struct PipelineConfig {
    /// Fold the paragraph collection's test split into stage-1 training
    /// (the legal-style merged fine-tuning); off by default.
    pub merge_paragraph_splits: bool,
    pub corpus: CorpusSettings,
    pub bm25: Bm25Params,
    pub retrieval: RetrievalSettings,
    pub augment: AugmentSettings,
    pub encoder: EncoderSettings,
    pub stage1: Stage1TrainConfig,
    pub sampling: NegativeSamplingStrategy,
    pub interaction: InteractionConfig,
    pub aggregator: AggTrainingConfig,
    pub evaluation: EvaluationSettings,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CorpusSettings {
    pub lowercase: bool,
    pub paragraph_len: usize,
    pub max_pair_tokens: usize,
}

impl Default for CorpusSettings {
    fn default() -> Self {
        CorpusSettings {
            lowercase: true,
            paragraph_len: DEFAULT_PARAGRAPH_LEN,
            max_pair_tokens: DEFAULT_MAX_PAIR_TOKENS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct RetrievalSettings {
    /// Top-K pool size retrieved per query.
    pub top_k: usize,
}

impl Default for RetrievalSettings {
    fn default() -> Self {
        RetrievalSettings { top_k: 50 }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.bm25.validate()?;
        self.interaction.validate()?;
        if self.retrieval.top_k == 0 {
            return Err(Error::Config("retrieval.top-k must be >= 1".into()));
        }
        if self.corpus.paragraph_len == 0 {
            return Err(Error::Config("corpus.paragraph-len must be >= 1".into()));
        }
        if self.corpus.max_pair_tokens < 4 {
            return Err(Error::Config("corpus.max-pair-tokens must be >= 4".into()));
        }
        if !(self.evaluation.alpha > 0.0 && self.evaluation.alpha < 1.0) {
            return Err(Error::Config("evaluation.alpha must be in (0, 1)".into()));
        }
        if self.evaluation.cutoff == 0 {
            return Err(Error::Config("evaluation.cutoff must be >= 1".into()));
        }
        Ok(())
    }
}

/// Tokenized corpus plus the vocabulary it was tokenized with.
pub struct PreparedCorpus {
    pub vocab: Vocabulary,
    pub documents: Vec<Document>,
}

/// Build the vocabulary from the corpus and tokenize every document.
pub fn prepare_corpus(records: &[CorpusRecord], cfg: &PipelineConfig) -> Result<PreparedCorpus> {
    let vocab = Vocabulary::build(
        records.iter().map(|r| r.text.as_str()),
        cfg.corpus.lowercase,
    );
    let documents = tokenize_corpus(records, &vocab, cfg)?;
    Ok(PreparedCorpus { vocab, documents })
}

/// Tokenize records under an existing vocabulary.
pub fn tokenize_corpus(
    records: &[CorpusRecord],
    vocab: &Vocabulary,
    cfg: &PipelineConfig,
) -> Result<Vec<Document>> {
    records
        .iter()
        .map(|r| {
            Document::from_text(
                r.id.clone(),
                r.text.clone(),
                vocab,
                cfg.corpus.lowercase,
                cfg.corpus.paragraph_len,
            )
        })
        .collect()
}

/// First-stage retrieval for a set of queries. When `pools` is given, each
/// query is scored against its own candidate pool.
pub fn retrieval_run(
    queries: &[String],
    docs: &CorpusIndex,
    index: &InvertedIndex,
    cfg: &PipelineConfig,
    pools: Option<&CandidatePool>,
) -> Result<RetrievalRun> {
    let mut sorted: Vec<&String> = queries.iter().collect();
    sorted.sort();
    sorted.dedup();
    let mut run = RetrievalRun::new();
    for query_id in sorted {
        let query_doc = docs.document(query_id)?;
        let pool = match pools {
            Some(p) => Some(p.candidates(query_id).ok_or_else(|| {
                Error::Data(format!("no candidate pool for query `{query_id}`"))
            })?),
            None => None,
        };
        let ranking = retrieve_topk(query_doc, cfg.retrieval.top_k, index, &cfg.bm25, pool)?;
        run.insert_ranking(query_id.clone(), ranking)?;
    }
    Ok(run)
}

/// The run's candidates as a pool, rank order preserved.
pub fn pool_from_run(run: &RetrievalRun) -> Result<CandidatePool> {
    let mut pool = CandidatePool::new();
    for (query_id, ranking) in run.iter() {
        for (doc_id, _) in ranking {
            pool.push(query_id.clone(), doc_id.clone())?;
        }
    }
    Ok(pool)
}

/// Encode interaction matrices for every (query, candidate) pair of a pool.
/// Parallel over candidates within a query; output order is deterministic.
pub fn encode_matrices(
    source: &dyn PairRepresentationSource,
    docs: &CorpusIndex,
    pools: &CandidatePool,
    cfg: &InteractionConfig,
) -> Result<Vec<InteractionMatrix>> {
    let mut out = Vec::new();
    for (query_id, cands) in pools.iter() {
        let query_doc = docs.document(query_id)?;
        let cand_docs: Vec<&Document> = cands
            .iter()
            .map(|c| docs.document(c))
            .collect::<Result<_>>()?;
        out.extend(build_matrices_for_query(source, query_doc, &cand_docs, cfg)?);
    }
    Ok(out)
}

/// Max-pool matrices into per-query candidate sequences.
pub fn sequences_by_query(
    matrices: &[InteractionMatrix],
) -> BTreeMap<String, Vec<(String, Vec<Vec<f64>>)>> {
    let mut out: BTreeMap<String, Vec<(String, Vec<Vec<f64>>)>> = BTreeMap::new();
    for matrix in matrices {
        let sequence = maxpool_over_candidates(matrix);
        out.entry(matrix.query_id.clone())
            .or_default()
            .push((matrix.cand_id.clone(), sequence.to_inputs()));
    }
    out
}

/// Attach binary labels from qrels to the pooled sequences.
pub fn labeled_sequences(
    sequences: &BTreeMap<String, Vec<(String, Vec<Vec<f64>>)>>,
    qrels: &QrelSet,
) -> Vec<LabeledSequence> {
    let mut out = Vec::new();
    for (query_id, cands) in sequences {
        for (cand_id, inputs) in cands {
            let label = u8::from(qrels.is_relevant(query_id, cand_id));
            out.push((inputs.clone(), label));
        }
    }
    out
}

/// Run the trained aggregator over every query's encoded candidates.
pub fn predict_pools(
    model: &crate::aggregator::AttentionRnnModel,
    sequences: &BTreeMap<String, Vec<(String, Vec<Vec<f64>>)>>,
) -> Result<BTreeMap<String, Vec<Prediction>>> {
    let mut out = BTreeMap::new();
    for (query_id, cands) in sequences {
        out.insert(query_id.clone(), predict_relevance(model, cands)?);
    }
    Ok(out)
}

/// Restrict paragraph tasks to those whose query paragraph belongs to one of
/// the given query documents.
pub fn tasks_for_queries<'a>(
    tasks: &'a [ParagraphTask],
    queries: &BTreeSet<String>,
) -> Vec<&'a ParagraphTask> {
    tasks
        .iter()
        .filter(|t| queries.contains(&t.query.doc_id))
        .collect()
}

/// Restrict paragraph tasks by task id.
pub fn tasks_by_id<'a>(
    tasks: &'a [ParagraphTask],
    ids: &BTreeSet<String>,
) -> Vec<&'a ParagraphTask> {
    tasks.iter().filter(|t| ids.contains(&t.query_id)).collect()
}

/// Build the stage-1 dataset for the given tasks.
pub fn stage1_dataset(
    tasks: &[&ParagraphTask],
    docs: &CorpusIndex,
    cfg: &PipelineConfig,
) -> Result<Vec<Stage1Example>> {
    let owned: Vec<ParagraphTask> = tasks.iter().map(|t| (*t).clone()).collect();
    build_stage1_dataset(&owned, docs, &cfg.sampling, cfg.corpus.max_pair_tokens)
}

/// Outcome of the end-to-end single-domain run: first-stage diagnostics, the
/// cutoff baseline and the trained model's pooled report on the test split.
#[derive(Debug, Clone)]
pub struct SingleDomainOutcome {
    pub vocab_size: usize,
    pub stage1_log: Vec<EpochLog>,
    pub loss_curve: Vec<f64>,
    pub recall_at_top_k: f64,
    pub baseline: EvalReport,
    pub baseline_per_query: BTreeMap<String, f64>,
    pub model: EvalReport,
    pub model_per_query: BTreeMap<String, f64>,
    pub significance: SignificanceResult,
}

/// Train the full pipeline on the benchmark's training split and evaluate
/// both the pipeline and the first-stage cutoff baseline on the held-out
/// test split (full candidate pools).
pub fn run_single_domain(
    bench: &crate::corpus::synthetic::SyntheticBenchmark,
    cfg: &PipelineConfig,
) -> Result<SingleDomainOutcome> {
    cfg.validate()?;
    let prepared = prepare_corpus(&bench.corpus, cfg)?;
    let docs = CorpusIndex::from_documents(&prepared.documents);

    // Stage 1 trains on the paragraph collection, which has its own split
    // independent of the document-level one. An encoder without pretraining
    // only embeds terms it has seen, so the paragraph data must cover the
    // corpus topics broadly; the document-level test queries stay held out
    // from everything the aggregator learns from.
    let mut para_train: BTreeSet<String> = bench.para_train_tasks.iter().cloned().collect();
    if cfg.merge_paragraph_splits {
        para_train.extend(bench.para_test_tasks.iter().cloned());
    }
    let tasks = tasks_by_id(&bench.para_tasks, &para_train);
    if tasks.is_empty() {
        return Err(Error::Data("no paragraph tasks in the training split".into()));
    }
    let dataset = stage1_dataset(&tasks, &docs, cfg)?;
    let mut encoder = MicroEncoder::init(cfg.encoder.config(prepared.vocab.size()))?;
    let stage1_log = train_stage1(&mut encoder, &dataset, &cfg.stage1)?;

    // First stage.
    let index = build_index(&prepared.documents, &cfg.bm25)?;
    let train_run = retrieval_run(&bench.train_queries, &docs, &index, cfg, Some(&bench.pools))?;
    let train_pool = crate::bm25::augment_training_pool(
        &train_run,
        &bench.qrels,
        cfg.augment.target_size,
        cfg.augment.seed,
    )?;
    let test_run = retrieval_run(&bench.test_queries, &docs, &index, cfg, Some(&bench.pools))?;
    let recall_at_top_k = crate::bm25::recall_at_k(&test_run, &bench.qrels, cfg.retrieval.top_k)?;

    // Stage 2.
    let source = crate::interaction::EncoderSource {
        encoder: &encoder,
        max_pair_tokens: cfg.corpus.max_pair_tokens,
    };
    let train_matrices = encode_matrices(&source, &docs, &train_pool, &cfg.interaction)?;
    let train_sequences = sequences_by_query(&train_matrices);
    let train_data = labeled_sequences(&train_sequences, &bench.qrels);
    let (model, loss_curve) =
        crate::aggregator::train_aggregator(&train_data, &cfg.aggregator, None, None)?;

    // Predict the encoded top-K of each test query; everything else in the
    // full pool defaults to irrelevant.
    let test_encode_pool = pool_from_run(&test_run)?;
    let test_matrices = encode_matrices(&source, &docs, &test_encode_pool, &cfg.interaction)?;
    let test_sequences = sequences_by_query(&test_matrices);
    let predictions = predict_pools(&model, &test_sequences)?;
    let decisions = decisions_from_predictions(&predictions);

    let test_set: BTreeSet<String> = bench.test_queries.iter().cloned().collect();
    let full_pools = bench.pools.restrict_to(&test_set);
    let test_qrels = bench.qrels.restrict_to(&test_set);
    let cutoff = CutoffConfig {
        cutoff: cfg.evaluation.cutoff,
    };
    let baseline = cutoff_evaluate(&test_run, &test_qrels, &cutoff, &full_pools)?;
    let baseline_decisions = decisions_from_cutoff(&test_run, &cutoff);
    let baseline_per_query = per_query_f1(
        &baseline_decisions,
        &test_qrels,
        &full_pools,
        cfg.evaluation.degenerate_f1,
    )?;
    let model_report = pooled_binary_metrics(&decisions, &test_qrels, &full_pools)?;
    let model_per_query = per_query_f1(
        &decisions,
        &test_qrels,
        &full_pools,
        cfg.evaluation.degenerate_f1,
    )?;

    let a: Vec<f64> = model_per_query.values().copied().collect();
    let b: Vec<f64> = baseline_per_query.values().copied().collect();
    let significance = paired_t_test(&a, &b, cfg.evaluation.alpha)?;

    Ok(SingleDomainOutcome {
        vocab_size: prepared.vocab.size(),
        stage1_log,
        loss_curve,
        recall_at_top_k,
        baseline,
        baseline_per_query,
        model: model_report,
        model_per_query,
        significance,
    })
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;
    use crate::corpus::synthetic::{generate_synthetic_benchmark, small_config};

    pub(crate) fn fast_config() -> PipelineConfig {
        PipelineConfig {
            corpus: CorpusSettings {
                paragraph_len: 64,
                ..Default::default()
            },
            bm25: Bm25Params {
                doc_prefix_len: 60,
                ..Default::default()
            },
            retrieval: RetrievalSettings { top_k: 10 },
            augment: AugmentSettings {
                target_size: 8,
                seed: 1,
            },
            encoder: EncoderSettings {
                d_embed: 8,
                d_repr: 8,
                seed: 2,
            },
            stage1: Stage1TrainConfig {
                lr: 0.02,
                batch_size: 8,
                epochs: 6,
                seed: 3,
            },
            aggregator: AggTrainingConfig {
                hidden: 8,
                lr: 0.01,
                epochs: 12,
                batch_size: 8,
                seed: 4,
                ..Default::default()
            },
            evaluation: EvaluationSettings {
                cutoff: 3,
                ..Default::default()
            },
            ..Default::default()
        }
    }

    #[test]
    fn single_domain_run_completes_and_reports() {
        let bench = generate_synthetic_benchmark(&small_config(21)).unwrap();
        let outcome = run_single_domain(&bench, &fast_config()).unwrap();
        assert!(outcome.recall_at_top_k > 0.5, "recall {}", outcome.recall_at_top_k);
        assert!(outcome.baseline.total_pairs > 0);
        assert_eq!(
            outcome.model_per_query.len(),
            bench.test_queries.len()
        );
        assert!(outcome.model.f1 >= 0.0 && outcome.model.f1 <= 1.0);
    }

    #[test]
    fn single_domain_run_is_deterministic() {
        let bench = generate_synthetic_benchmark(&small_config(22)).unwrap();
        let cfg = fast_config();
        let a = run_single_domain(&bench, &cfg).unwrap();
        let b = run_single_domain(&bench, &cfg).unwrap();
        assert_eq!(a.model, b.model);
        assert_eq!(a.baseline, b.baseline);
        assert_eq!(a.loss_curve, b.loss_curve);
    }
}
