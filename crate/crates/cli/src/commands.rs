//! Subcommand implementations. Every stage boundary is a file, so any stage
//! can be re-run or swapped (externally computed pair vectors can replace
//! the built-in encoder at `encode`, for example).

use std::collections::BTreeSet;
use std::io::Write;
use std::path::{Path, PathBuf};

use plir_core::aggregator::{train_aggregator, AttentionRnnModel};
use plir_core::bm25::{augment_training_pool, build_index, recall_at_k, InvertedIndex, RetrievalRun};
use plir_core::corpus::io as corpus_io;
use plir_core::corpus::synthetic::{self, generate_synthetic_benchmark};
use plir_core::corpus::{CandidatePool, Document, Vocabulary};
use plir_core::error::{Error, Result};
use plir_core::evaluation::{
    cutoff_evaluate, decisions_from_cutoff, paired_t_test,
    per_query_f1, pooled_binary_metrics, render_table, run_cross_domain_matrix,
    write_report_jsonl, CutoffConfig, Decisions, DomainInputs, ReportRow,
};
use plir_core::interaction::{read_cache, write_cache, EncoderSource, StoreSource};
use plir_core::pair_encoder::{
    stage1_f1, train_stage1, CorpusIndex, ExternalVectorStore, MicroEncoder, Stage1Example,
};
use plir_core::pipeline::{
    encode_matrices, labeled_sequences, pool_from_run, predict_pools, retrieval_run,
    sequences_by_query, stage1_dataset, tasks_by_id,
};

use crate::config::CliConfig;
use crate::manifest::ManifestBuilder;

// Standard artifact names inside the output directory.
const VOCAB_FILE: &str = "vocab.txt";
const INDEX_FILE: &str = "index.bin";
const RUN_FILE: &str = "run.trec";
const TRAIN_POOL_FILE: &str = "train-pool.txt";
const STAGE1_FILE: &str = "stage1.jsonl";
const STAGE1_LOG_FILE: &str = "stage1-log.jsonl";
const ENCODER_FILE: &str = "encoder.ckpt";
const CACHE_FILE: &str = "cache.bin";
const AGGREGATOR_FILE: &str = "aggregator.ckpt";
const LOSS_CURVE_FILE: &str = "loss-curve.jsonl";
const PREDICTIONS_FILE: &str = "predictions.jsonl";
const PREDICTIONS_RUN_FILE: &str = "predictions.trec";

fn require_input(path: &Path, produced_by: &str) -> Result<()> {
    if !path.exists() {
        return Err(Error::Data(format!(
            "missing input file {} (produced by `plir {produced_by}`)",
            path.display()
        )));
    }
    Ok(())
}

fn ensure_out_dir(config: &CliConfig) -> Result<()> {
    std::fs::create_dir_all(&config.out).map_err(|e| Error::io(&config.out, e))
}

struct LoadedCorpus {
    documents: Vec<Document>,
    corpus_path: PathBuf,
    vocab_path: PathBuf,
}

fn load_corpus_with_vocab(config: &CliConfig) -> Result<LoadedCorpus> {
    let corpus_path = config.data_path(&config.paths.corpus, synthetic::files::CORPUS);
    let vocab_path = config.artifact(VOCAB_FILE);
    require_input(&corpus_path, "synth")?;
    require_input(&vocab_path, "index")?;
    let records = corpus_io::read_corpus(&corpus_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;
    let documents = plir_core::pipeline::tokenize_corpus(&records, &vocab, &config.pipeline)?;
    Ok(LoadedCorpus {
        documents,
        corpus_path,
        vocab_path,
    })
}

fn query_list(config: &CliConfig, flag: Option<&String>, pools: &CandidatePool) -> Result<Vec<String>> {
    let path = flag
        .map(PathBuf::from)
        .or_else(|| config.paths.queries.clone());
    match path {
        Some(path) => {
            require_input(&path, "synth")?;
            corpus_io::read_query_list(&path)
        }
        None => Ok(pools.queries().cloned().collect()),
    }
}

fn write_jsonl<T: serde::Serialize>(items: &[T], path: &Path) -> Result<()> {
    plir_core::binio::atomic_write_text(path, |w| {
        for item in items {
            let line = serde_json::to_string(item).expect("record serializes");
            writeln!(w, "{line}")?;
        }
        Ok(())
    })
}

fn read_jsonl<T: serde::de::DeserializeOwned>(path: &Path) -> Result<Vec<T>> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(line)
                .map_err(|e| Error::parse(path, i + 1, format!("invalid record: {e}")))?,
        );
    }
    Ok(out)
}

// ============================================================================
// synth
// ============================================================================

pub fn cmd_synth(config: &CliConfig) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("synth", config);
    let bench = generate_synthetic_benchmark(&config.synth)?;
    synthetic::write_benchmark(&bench, &config.out)?;
    for name in [
        synthetic::files::CORPUS,
        synthetic::files::QRELS,
        synthetic::files::POOLS,
        synthetic::files::PARA_QRELS,
        synthetic::files::PARA_POOLS,
        synthetic::files::TRAIN_QUERIES,
        synthetic::files::TEST_QUERIES,
    ] {
        manifest.output(config.out.join(name));
    }
    println!(
        "generated {} documents, {} queries ({} train / {} test), pools of {}",
        bench.corpus.len(),
        bench.train_queries.len() + bench.test_queries.len(),
        bench.train_queries.len(),
        bench.test_queries.len(),
        config.synth.pool_size
    );
    manifest.write(&config.out)
}

// ============================================================================
// index
// ============================================================================

pub fn cmd_index(config: &CliConfig) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("index", config);
    let corpus_path = config.data_path(&config.paths.corpus, synthetic::files::CORPUS);
    require_input(&corpus_path, "synth")?;
    manifest.input(&corpus_path)?;
    let records = corpus_io::read_corpus(&corpus_path)?;
    let prepared = plir_core::pipeline::prepare_corpus(&records, &config.pipeline)?;
    let vocab_path = config.artifact(VOCAB_FILE);
    prepared.vocab.save(&vocab_path)?;
    let index = build_index(&prepared.documents, &config.pipeline.bm25)?;
    let index_path = config.artifact(INDEX_FILE);
    index.save(&index_path)?;
    println!(
        "indexed {} documents, {} terms, avgdl {:.2}",
        index.n_docs(),
        index.terms().count(),
        index.avgdl()
    );
    manifest.output(vocab_path);
    manifest.output(index_path);
    manifest.write(&config.out)
}

// ============================================================================
// retrieve
// ============================================================================

pub struct RetrieveArgs {
    pub run_out: Option<String>,
    pub queries: Option<String>,
    pub whole_corpus: bool,
}

pub fn cmd_retrieve(config: &CliConfig, args: &RetrieveArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("retrieve", config);
    let index_path = config.artifact(INDEX_FILE);
    require_input(&index_path, "index")?;
    let loaded = load_corpus_with_vocab(config)?;
    manifest.input(&loaded.corpus_path)?;
    manifest.input(&loaded.vocab_path)?;
    manifest.input(&index_path)?;
    let index = InvertedIndex::load(&index_path)?;

    let pools_path = config.data_path(&config.paths.pools, synthetic::files::POOLS);
    let pools = if args.whole_corpus {
        None
    } else {
        require_input(&pools_path, "synth")?;
        manifest.input(&pools_path)?;
        Some(corpus_io::read_pools(&pools_path)?)
    };
    let queries = match (&pools, args.queries.as_ref()) {
        (Some(p), flag) => query_list(config, flag, p)?,
        (None, Some(flag)) => {
            let path = PathBuf::from(flag);
            require_input(&path, "synth")?;
            corpus_io::read_query_list(&path)?
        }
        (None, None) => match &config.paths.queries {
            Some(path) => {
                require_input(path, "synth")?;
                corpus_io::read_query_list(path)?
            }
            None => {
                return Err(Error::Config(
                    "whole-corpus retrieval needs --queries or paths.queries".into(),
                ))
            }
        },
    };

    let docs = CorpusIndex::from_documents(&loaded.documents);
    let run = retrieval_run(&queries, &docs, &index, &config.pipeline, pools.as_ref())?;
    let run_path = args
        .run_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(RUN_FILE));
    run.write_trec(&run_path, &config.tag)?;
    println!("retrieved top-{} for {} queries", config.pipeline.retrieval.top_k, run.len());

    let qrels_path = config.data_path(&config.paths.qrels, synthetic::files::QRELS);
    if qrels_path.exists() {
        let qrels = corpus_io::read_qrels(&qrels_path)?;
        if let Ok(recall) = recall_at_k(&run, &qrels, config.pipeline.retrieval.top_k) {
            println!("recall@{} = {recall:.4}", config.pipeline.retrieval.top_k);
        }
    }
    manifest.output(run_path);
    manifest.write(&config.out)
}

// ============================================================================
// pool-augment
// ============================================================================

pub struct PoolAugmentArgs {
    pub run: Option<String>,
    pub pool_out: Option<String>,
}

pub fn cmd_pool_augment(config: &CliConfig, args: &PoolAugmentArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("pool-augment", config);
    let run_path = args
        .run
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(RUN_FILE));
    require_input(&run_path, "retrieve")?;
    let qrels_path = config.data_path(&config.paths.qrels, synthetic::files::QRELS);
    require_input(&qrels_path, "synth")?;
    manifest.input(&run_path)?;
    manifest.input(&qrels_path)?;
    let run = RetrievalRun::read_trec(&run_path)?;
    let qrels = corpus_io::read_qrels(&qrels_path)?;
    let pool = augment_training_pool(
        &run,
        &qrels,
        config.pipeline.augment.target_size,
        config.pipeline.augment.seed,
    )?;
    let out_path = args
        .pool_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(TRAIN_POOL_FILE));
    corpus_io::write_pools(&pool, &out_path)?;
    println!(
        "augmented pools for {} queries to {} candidates each",
        pool.len(),
        config.pipeline.augment.target_size
    );
    manifest.output(out_path);
    manifest.write(&config.out)
}

// ============================================================================
// stage1-build
// ============================================================================

pub struct Stage1BuildArgs {
    pub dataset_out: Option<String>,
    pub tasks: Option<String>,
    pub merge_paragraph_splits: bool,
}

pub fn cmd_stage1_build(config: &CliConfig, args: &Stage1BuildArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("stage1-build", config);
    let para_qrels = config.data_path(&config.paths.para_qrels, synthetic::files::PARA_QRELS);
    let para_pools = config.data_path(&config.paths.para_pools, synthetic::files::PARA_POOLS);
    require_input(&para_qrels, "synth")?;
    require_input(&para_pools, "synth")?;
    let loaded = load_corpus_with_vocab(config)?;
    manifest.input(&para_qrels)?;
    manifest.input(&para_pools)?;
    manifest.input(&loaded.corpus_path)?;
    let tasks = corpus_io::read_paragraph_tasks(&para_qrels, &para_pools)?;

    // The paragraph collection has its own train/test split, independent of
    // the document-level one. Default: the paragraph training split. The
    // merge flag folds the paragraph test split back in (the document-level
    // evaluation stays untouched either way).
    let merge = args.merge_paragraph_splits || config.pipeline.merge_paragraph_splits;
    let selected: Vec<&plir_core::corpus::ParagraphTask> = if merge {
        tasks.iter().collect()
    } else {
        let list_path = args
            .tasks
            .as_ref()
            .map(PathBuf::from)
            .unwrap_or_else(|| config.out.join(synthetic::files::PARA_TRAIN_TASKS));
        if list_path.exists() {
            manifest.input(&list_path)?;
            let ids: BTreeSet<String> =
                corpus_io::read_query_list(&list_path)?.into_iter().collect();
            tasks_by_id(&tasks, &ids)
        } else if args.tasks.is_some() {
            return Err(Error::Data(format!(
                "missing task list {}",
                list_path.display()
            )));
        } else {
            tasks.iter().collect()
        }
    };
    if selected.is_empty() {
        return Err(Error::Data("no paragraph tasks selected".into()));
    }

    let docs = CorpusIndex::from_documents(&loaded.documents);
    let dataset = stage1_dataset(&selected, &docs, &config.pipeline)?;
    let positives = dataset.iter().filter(|e| e.label == 1).count();
    let out_path = args
        .dataset_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(STAGE1_FILE));
    write_jsonl(&dataset, &out_path)?;
    println!(
        "built {} pair examples ({} positive, {:.1}%)",
        dataset.len(),
        positives,
        100.0 * positives as f64 / dataset.len() as f64
    );
    manifest.output(out_path);
    manifest.write(&config.out)
}

// ============================================================================
// stage1-train
// ============================================================================

pub struct Stage1TrainArgs {
    pub dataset: Option<String>,
    pub encoder_out: Option<String>,
}

pub fn cmd_stage1_train(config: &CliConfig, args: &Stage1TrainArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("stage1-train", config);
    let dataset_path = args
        .dataset
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(STAGE1_FILE));
    require_input(&dataset_path, "stage1-build")?;
    let vocab_path = config.artifact(VOCAB_FILE);
    require_input(&vocab_path, "index")?;
    manifest.input(&dataset_path)?;
    manifest.input(&vocab_path)?;
    let dataset: Vec<Stage1Example> = read_jsonl(&dataset_path)?;
    let vocab = Vocabulary::load(&vocab_path)?;

    let mut encoder = MicroEncoder::init(config.pipeline.encoder.config(vocab.size()))?;
    let log = train_stage1(&mut encoder, &dataset, &config.pipeline.stage1)?;
    for entry in &log {
        println!(
            "epoch {}: loss {:.4}, P {:.3}, R {:.3}, F1 {:.3}",
            entry.epoch, entry.mean_loss, entry.precision, entry.recall, entry.f1
        );
    }
    let scores = stage1_f1(&encoder, &dataset)?;
    println!("final training F1: {:.4}", scores.f1);

    let encoder_path = args
        .encoder_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(ENCODER_FILE));
    encoder.save(&encoder_path)?;
    let log_path = config.artifact(STAGE1_LOG_FILE);
    write_jsonl(&log, &log_path)?;
    manifest.output(encoder_path);
    manifest.output(log_path);
    manifest.write(&config.out)
}

// ============================================================================
// encode
// ============================================================================

pub struct EncodeArgs {
    pub pool: Option<String>,
    pub run: Option<String>,
    pub encoder: Option<String>,
    pub vectors: Option<String>,
    pub cache_out: Option<String>,
    pub export_vectors: Option<String>,
}

pub fn cmd_encode(config: &CliConfig, args: &EncodeArgs) -> Result<()> {
    if args.pool.is_some() == args.run.is_some() {
        return Err(Error::Config(
            "encode needs exactly one of --pool or --run".into(),
        ));
    }
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("encode", config);
    let loaded = load_corpus_with_vocab(config)?;
    manifest.input(&loaded.corpus_path)?;
    manifest.input(&loaded.vocab_path)?;

    let pool = match (&args.pool, &args.run) {
        (Some(pool_path), None) => {
            let path = PathBuf::from(pool_path);
            require_input(&path, "pool-augment")?;
            manifest.input(&path)?;
            corpus_io::read_pools(&path)?
        }
        (None, Some(run_path)) => {
            let path = PathBuf::from(run_path);
            require_input(&path, "retrieve")?;
            manifest.input(&path)?;
            pool_from_run(&RetrievalRun::read_trec(&path)?)?
        }
        _ => unreachable!("validated above"),
    };

    let docs = CorpusIndex::from_documents(&loaded.documents);
    let matrices = match &args.vectors {
        Some(vectors_path) => {
            let path = PathBuf::from(vectors_path);
            require_input(&path, "encode --export-vectors")?;
            manifest.input(&path)?;
            let store = ExternalVectorStore::import(&path)?;
            encode_matrices(&StoreSource(&store), &docs, &pool, &config.pipeline.interaction)?
        }
        None => {
            let encoder_path = args
                .encoder
                .as_ref()
                .map(PathBuf::from)
                .unwrap_or_else(|| config.artifact(ENCODER_FILE));
            require_input(&encoder_path, "stage1-train")?;
            manifest.input(&encoder_path)?;
            let encoder = MicroEncoder::load(&encoder_path)?;
            let source = EncoderSource {
                encoder: &encoder,
                max_pair_tokens: config.pipeline.corpus.max_pair_tokens,
            };
            encode_matrices(&source, &docs, &pool, &config.pipeline.interaction)?
        }
    };

    let cache_path = args
        .cache_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(CACHE_FILE));
    write_cache(&matrices, &cache_path)?;
    println!("encoded {} interaction matrices", matrices.len());
    manifest.output(&cache_path);

    if let Some(export) = &args.export_vectors {
        let d_repr = matrices.first().map(|m| m.d_repr).unwrap_or(0);
        let mut store = ExternalVectorStore::new(d_repr);
        for m in &matrices {
            for i in 0..m.n {
                for j in 0..m.m {
                    store.insert(
                        m.query_id.clone(),
                        m.cand_id.clone(),
                        i as u16,
                        j as u16,
                        m.cell(i, j).to_vec(),
                    )?;
                }
            }
        }
        let export_path = PathBuf::from(export);
        store.export(&export_path)?;
        println!("exported {} pair vectors", store.len());
        manifest.output(export_path);
    }
    manifest.write(&config.out)
}

// ============================================================================
// agg-train
// ============================================================================

pub struct AggTrainArgs {
    pub cache: Option<String>,
    pub model_out: Option<String>,
    pub checkpoint_dir: Option<String>,
}

pub fn cmd_agg_train(config: &CliConfig, args: &AggTrainArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("agg-train", config);
    let cache_path = args
        .cache
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(CACHE_FILE));
    require_input(&cache_path, "encode")?;
    let qrels_path = config.data_path(&config.paths.qrels, synthetic::files::QRELS);
    require_input(&qrels_path, "synth")?;
    manifest.input(&cache_path)?;
    manifest.input(&qrels_path)?;
    let matrices = read_cache(&cache_path)?;
    let qrels = corpus_io::read_qrels(&qrels_path)?;
    let sequences = sequences_by_query(&matrices);
    let dataset = labeled_sequences(&sequences, &qrels);
    let checkpoint_dir = args.checkpoint_dir.as_ref().map(PathBuf::from);
    let (model, curve) = train_aggregator(
        &dataset,
        &config.pipeline.aggregator,
        checkpoint_dir.as_deref(),
        None,
    )?;
    for (epoch, loss) in curve.iter().enumerate() {
        println!("epoch {epoch}: loss {loss:.4}");
    }
    let model_path = args
        .model_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(AGGREGATOR_FILE));
    model.save(&model_path)?;
    let curve_path = config.artifact(LOSS_CURVE_FILE);
    let curve_records: Vec<serde_json::Value> = curve
        .iter()
        .enumerate()
        .map(|(epoch, loss)| serde_json::json!({"epoch": epoch, "loss": loss}))
        .collect();
    write_jsonl(&curve_records, &curve_path)?;
    manifest.output(model_path);
    manifest.output(curve_path);
    manifest.write(&config.out)
}

// ============================================================================
// predict
// ============================================================================

#[derive(Debug, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct PredictionRecord {
    pub query_id: String,
    pub cand_id: String,
    pub probability: f64,
    pub relevant: bool,
}

pub struct PredictArgs {
    pub cache: Option<String>,
    pub model: Option<String>,
    pub predictions_out: Option<String>,
    pub run_out: Option<String>,
}

pub fn cmd_predict(config: &CliConfig, args: &PredictArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("predict", config);
    let cache_path = args
        .cache
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(CACHE_FILE));
    let model_path = args
        .model
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(AGGREGATOR_FILE));
    require_input(&cache_path, "encode")?;
    require_input(&model_path, "agg-train")?;
    manifest.input(&cache_path)?;
    manifest.input(&model_path)?;
    let matrices = read_cache(&cache_path)?;
    let model = AttentionRnnModel::load(&model_path)?;
    let sequences = sequences_by_query(&matrices);
    let predictions = predict_pools(&model, &sequences)?;

    let mut records = Vec::new();
    let mut run = RetrievalRun::new();
    for (query_id, preds) in &predictions {
        let mut ranked: Vec<(String, f64)> = preds
            .iter()
            .map(|p| (p.cand_id.clone(), p.probability))
            .collect();
        ranked.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then_with(|| a.0.cmp(&b.0)));
        run.insert_ranking(query_id.clone(), ranked)?;
        for p in preds {
            records.push(PredictionRecord {
                query_id: query_id.clone(),
                cand_id: p.cand_id.clone(),
                probability: p.probability,
                relevant: p.relevant,
            });
        }
    }
    let predictions_path = args
        .predictions_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(PREDICTIONS_FILE));
    write_jsonl(&records, &predictions_path)?;
    let run_path = args
        .run_out
        .as_ref()
        .map(PathBuf::from)
        .unwrap_or_else(|| config.artifact(PREDICTIONS_RUN_FILE));
    run.write_trec(&run_path, &config.tag)?;
    println!(
        "predicted {} pairs over {} queries ({} relevant)",
        records.len(),
        predictions.len(),
        records.iter().filter(|r| r.relevant).count()
    );
    manifest.output(predictions_path);
    manifest.output(run_path);
    manifest.write(&config.out)
}

// ============================================================================
// evaluate
// ============================================================================

pub struct EvaluateArgs {
    pub predictions: Option<String>,
    pub run: Option<String>,
    pub baseline_run: Option<String>,
    pub label: Option<String>,
    pub report_out: Option<String>,
}

pub fn cmd_evaluate(config: &CliConfig, args: &EvaluateArgs) -> Result<()> {
    if args.predictions.is_some() == args.run.is_some() {
        return Err(Error::Config(
            "evaluate needs exactly one of --predictions or --run".into(),
        ));
    }
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("evaluate", config);
    let qrels_path = config.data_path(&config.paths.qrels, synthetic::files::QRELS);
    let pools_path = config.data_path(&config.paths.pools, synthetic::files::POOLS);
    require_input(&qrels_path, "synth")?;
    require_input(&pools_path, "synth")?;
    manifest.input(&qrels_path)?;
    manifest.input(&pools_path)?;
    let qrels = corpus_io::read_qrels(&qrels_path)?;
    let pools = corpus_io::read_pools(&pools_path)?;
    let cutoff = CutoffConfig {
        cutoff: config.pipeline.evaluation.cutoff,
    };

    // Decisions of the evaluated system plus the queries it covers.
    let (decisions, covered, label): (Decisions, BTreeSet<String>, String) =
        match (&args.predictions, &args.run) {
            (Some(pred_path), None) => {
                let path = PathBuf::from(pred_path);
                require_input(&path, "predict")?;
                manifest.input(&path)?;
                let records: Vec<PredictionRecord> = read_jsonl(&path)?;
                let mut decisions = Decisions::new();
                let mut covered = BTreeSet::new();
                for r in records {
                    covered.insert(r.query_id.clone());
                    decisions
                        .entry(r.query_id)
                        .or_default()
                        .insert(r.cand_id, r.relevant);
                }
                (decisions, covered, "attention-rnn".to_string())
            }
            (None, Some(run_path)) => {
                let path = PathBuf::from(run_path);
                require_input(&path, "retrieve")?;
                manifest.input(&path)?;
                let run = RetrievalRun::read_trec(&path)?;
                let covered = run.queries().cloned().collect();
                (
                    decisions_from_cutoff(&run, &cutoff),
                    covered,
                    format!("cutoff-{}", cutoff.cutoff),
                )
            }
            _ => unreachable!("validated above"),
        };
    let label = args.label.clone().unwrap_or(label);

    let eval_pools = pools.restrict_to(&covered);
    if eval_pools.is_empty() {
        return Err(Error::Data(
            "no evaluated query appears in the candidate pools".into(),
        ));
    }
    let eval_qrels = qrels.restrict_to(&covered);
    let report = pooled_binary_metrics(&decisions, &eval_qrels, &eval_pools)?;
    let model_per_query = per_query_f1(
        &decisions,
        &eval_qrels,
        &eval_pools,
        config.pipeline.evaluation.degenerate_f1,
    )?;

    let mut rows = Vec::new();
    if let Some(baseline_path) = &args.baseline_run {
        let path = PathBuf::from(baseline_path);
        require_input(&path, "retrieve")?;
        manifest.input(&path)?;
        let baseline_run = RetrievalRun::read_trec(&path)?;
        let baseline_report = cutoff_evaluate(&baseline_run, &eval_qrels, &cutoff, &eval_pools)?;
        let baseline_per_query = per_query_f1(
            &decisions_from_cutoff(&baseline_run, &cutoff),
            &eval_qrels,
            &eval_pools,
            config.pipeline.evaluation.degenerate_f1,
        )?;
        let a: Vec<f64> = model_per_query.values().copied().collect();
        let b: Vec<f64> = baseline_per_query.values().copied().collect();
        let significance = paired_t_test(&a, &b, config.pipeline.evaluation.alpha)?;
        rows.push(ReportRow::new(
            format!("bm25 cutoff-{} (baseline)", cutoff.cutoff),
            baseline_report,
        ));
        rows.push(ReportRow::new(label, report).with_significance(significance));
    } else {
        rows.push(ReportRow::new(label, report));
    }

    let title = format!("{} test set ({} queries)", config.domain, eval_pools.len());
    let table = render_table(&title, &rows);
    print!("{table}");
    let prefix = args.report_out.clone().unwrap_or_else(|| "report".into());
    let table_path = config.artifact(&format!("{prefix}.txt"));
    plir_core::binio::atomic_write_text(&table_path, |w| write!(w, "{table}"))?;
    let jsonl_path = config.artifact(&format!("{prefix}.jsonl"));
    write_report_jsonl(&rows, &jsonl_path)?;
    manifest.output(table_path);
    manifest.output(jsonl_path);
    manifest.write(&config.out)
}

// ============================================================================
// crossdomain
// ============================================================================

pub struct CrossDomainArgs {
    pub domain_a: String,
    pub domain_b: String,
    pub name_a: Option<String>,
    pub name_b: Option<String>,
}

pub fn cmd_crossdomain(config: &CliConfig, args: &CrossDomainArgs) -> Result<()> {
    ensure_out_dir(config)?;
    let mut manifest = ManifestBuilder::new("crossdomain", config);
    let dir_a = PathBuf::from(&args.domain_a);
    let dir_b = PathBuf::from(&args.domain_b);
    for dir in [&dir_a, &dir_b] {
        require_input(&dir.join(synthetic::files::CORPUS), "synth")?;
    }
    let bench_a = synthetic::read_benchmark(&dir_a)?;
    let bench_b = synthetic::read_benchmark(&dir_b)?;
    for dir in [&dir_a, &dir_b] {
        for name in [synthetic::files::CORPUS, synthetic::files::QRELS, synthetic::files::POOLS] {
            manifest.input(&dir.join(name))?;
        }
    }
    let name_a = args.name_a.clone().unwrap_or_else(|| "a".into());
    let name_b = args.name_b.clone().unwrap_or_else(|| "b".into());
    let inputs_a = DomainInputs::from_benchmark(&name_a, &bench_a);
    let inputs_b = DomainInputs::from_benchmark(&name_b, &bench_b);
    let grid = run_cross_domain_matrix(&inputs_a, &inputs_b, &config.pipeline)?;

    let mut tables = String::new();
    let mut jsonl_rows = Vec::new();
    for results in &grid.test_sets {
        let mut rows = vec![ReportRow::new(
            format!("bm25 cutoff-{}", config.pipeline.evaluation.cutoff),
            results.baseline,
        )];
        for cell in &results.cells {
            rows.push(
                ReportRow::new(
                    format!("{} ({} encoder, {} rnn)", cell.label, cell.encoder, cell.aggregator),
                    cell.report,
                )
                .with_significance(cell.significance),
            );
        }
        let table = render_table(&format!("test set: {}", results.test_domain), &rows);
        tables.push_str(&table);
        tables.push('\n');
        for row in &rows {
            let mut value = serde_json::to_value(row).expect("row serializes");
            value
                .as_object_mut()
                .expect("row is an object")
                .insert("test-domain".into(), results.test_domain.clone().into());
            jsonl_rows.push(value);
        }
    }
    print!("{tables}");
    let table_path = config.artifact("grid-report.txt");
    plir_core::binio::atomic_write_text(&table_path, |w| write!(w, "{tables}"))?;
    let jsonl_path = config.artifact("grid.jsonl");
    write_jsonl(&jsonl_rows, &jsonl_path)?;
    manifest.output(table_path);
    manifest.output(jsonl_path);
    manifest.write(&config.out)
}
