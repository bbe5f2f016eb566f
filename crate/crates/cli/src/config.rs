//! Configuration loading: one TOML file, every scalar overridable by a flag
//! of the same dotted name (`--bm25.k1 1.2`). Flags win over the file, the
//! file over built-in defaults. `PLIR_CONFIG` names the default config path.

use std::path::{Path, PathBuf};

use plir_core::corpus::synthetic::SyntheticConfig;
use plir_core::pipeline::PipelineConfig;
use plir_core::{Error, Result};
use serde::{Deserialize, Serialize};

/// Environment variable holding the default config file path.
pub const CONFIG_ENV: &str = "PLIR_CONFIG";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct PathsConfig {
    pub corpus: Option<PathBuf>,
    pub qrels: Option<PathBuf>,
    pub pools: Option<PathBuf>,
    pub para_qrels: Option<PathBuf>,
    pub para_pools: Option<PathBuf>,
    pub queries: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct CliConfig {
    /// Domain label recorded in manifests and reports.
    pub domain: String,
    /// Output directory for all artifacts.
    pub out: PathBuf,
    /// Worker threads for parallel stages; 0 = all cores, 1 = fully serial.
    pub threads: usize,
    /// Run tag written into TREC run files.
    pub tag: String,
    pub paths: PathsConfig,
    pub synth: SyntheticConfig,
    #[serde(flatten)]
    pub pipeline: PipelineConfig,
}

impl Default for CliConfig {
    fn default() -> Self {
        CliConfig {
            domain: "synthetic".into(),
            out: PathBuf::from("out"),
            threads: 0,
            tag: "plir".into(),
            paths: PathsConfig::default(),
            synth: SyntheticConfig::default(),
            pipeline: PipelineConfig::default(),
        }
    }
}

impl CliConfig {
    /// Resolve a data path: the explicit `[paths]` entry when set, otherwise
    /// the standard file name inside the output directory.
    pub fn data_path(&self, explicit: &Option<PathBuf>, default_name: &str) -> PathBuf {
        explicit
            .clone()
            .unwrap_or_else(|| self.out.join(default_name))
    }

    /// Standard artifact location inside the output directory.
    pub fn artifact(&self, name: &str) -> PathBuf {
        self.out.join(name)
    }
}

/// Every overridable scalar: (dotted name, help text). The list doubles as
/// the schema documentation printed by `--help`.
pub const OVERRIDES: &[(&str, &str)] = &[
    ("domain", "domain label recorded in manifests and reports"),
    ("out", "output directory for all artifacts"),
    ("threads", "worker threads for parallel stages (0 = all cores, 1 = serial)"),
    ("tag", "run tag written into TREC run files"),
    ("paths.corpus", "corpus JSONL file"),
    ("paths.qrels", "document-level qrels file"),
    ("paths.pools", "candidate pool file"),
    ("paths.para-qrels", "paragraph-task qrels file"),
    ("paths.para-pools", "paragraph-task pool file"),
    ("paths.queries", "query-list file restricting a command"),
    ("corpus.lowercase", "lowercase text during tokenization"),
    ("corpus.paragraph-len", "tokens per paragraph window"),
    ("corpus.max-pair-tokens", "combined token budget for an encoder input pair"),
    ("bm25.k1", "BM25 k1"),
    ("bm25.b", "BM25 b"),
    ("bm25.doc-prefix-len", "tokens of each document (and query) the index sees"),
    ("retrieval.top-k", "candidates retrieved per query"),
    ("augment.target-size", "training pool size after augmentation"),
    ("augment.seed", "negative-sampling seed for pool augmentation"),
    ("encoder.d-embed", "token embedding width"),
    ("encoder.d-repr", "pair relevance vector width"),
    ("encoder.seed", "encoder initialization seed"),
    ("stage1.lr", "stage-1 learning rate"),
    ("stage1.batch-size", "stage-1 batch size"),
    ("stage1.epochs", "stage-1 epochs"),
    ("stage1.seed", "stage-1 shuffling seed"),
    ("sampling.kind", "negative sampling: all-pool-non-relevant | random-k-per-positive"),
    ("sampling.k", "negatives per positive for random-k sampling"),
    ("sampling.seed", "negative sampling seed"),
    ("interaction.max-query-paragraphs", "N: query paragraphs considered"),
    ("interaction.max-candidate-paragraphs", "M: candidate paragraphs considered"),
    ("aggregator.cell", "recurrent cell: lstm | gru"),
    ("aggregator.hidden", "aggregator hidden width"),
    ("aggregator.lr", "aggregator learning rate"),
    ("aggregator.epochs", "aggregator epochs"),
    ("aggregator.batch-size", "aggregator batch size"),
    ("aggregator.seed", "aggregator init/shuffle seed"),
    ("evaluation.cutoff", "ranking cutoff for the first-stage baseline"),
    ("evaluation.alpha", "significance level for the paired t-test"),
    ("evaluation.degenerate-f1", "per-query F1 when nothing is relevant nor predicted"),
    ("synth.seed", "benchmark generator seed"),
    ("synth.n-queries", "queries to generate"),
    ("synth.pool-size", "candidates per query pool"),
    ("synth.n-relevant-per-query", "relevant docs per query"),
    ("synth.vocab-size", "generator word types"),
    ("synth.doc-len-tokens", "nominal document length"),
    ("synth.paragraph-len", "paragraph alignment of injected content"),
    ("synth.topic-terms-per-query", "topic terms owned by each query"),
    ("synth.distractors-per-query", "salted non-relevant docs per query"),
    ("synth.strong-relevant-fraction", "fraction of relevant docs with the topical paragraph up front"),
    ("synth.topic-density", "topic-term density inside a topical paragraph"),
    ("synth.weak-topic-tokens", "topic tokens sprinkled into weak relevant docs"),
    ("synth.distractor-topic-tokens", "topic tokens sprinkled into distractors"),
    ("synth.para-pool-size", "candidate paragraphs per stage-1 task"),
    ("synth.para-relevants-per-task", "relevant paragraphs per stage-1 task"),
    ("synth.test-fraction", "fraction of queries held out as the test split"),
];

/// Parse an override value: bool, then integer, then float, else string.
fn parse_value(raw: &str) -> toml::Value {
    if let Ok(b) = raw.parse::<bool>() {
        return toml::Value::Boolean(b);
    }
    if let Ok(i) = raw.parse::<i64>() {
        return toml::Value::Integer(i);
    }
    if let Ok(f) = raw.parse::<f64>() {
        return toml::Value::Float(f);
    }
    toml::Value::String(raw.to_string())
}

fn set_dotted(root: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts = path.split('.').peekable();
    let mut table = root;
    while let Some(part) = parts.next() {
        if parts.peek().is_none() {
            table.insert(part.to_string(), value);
            return Ok(());
        }
        let entry = table
            .entry(part.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()));
        table = entry.as_table_mut().ok_or_else(|| {
            Error::Config(format!("config key `{path}`: `{part}` is not a table"))
        })?;
    }
    unreachable!("split always yields at least one part")
}

/// Load the config file (if any) and apply dotted-name overrides.
pub fn load_config(
    file: Option<&Path>,
    overrides: &[(String, String)],
) -> Result<CliConfig> {
    let mut table = match file {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
            text.parse::<toml::Table>()
                .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?
        }
        None => toml::Table::new(),
    };
    for (key, raw) in overrides {
        if !OVERRIDES.iter().any(|(name, _)| name == key) {
            return Err(Error::Config(format!("unknown configuration key `{key}`")));
        }
        set_dotted(&mut table, key, parse_value(raw))?;
    }
    let config: CliConfig = toml::Value::Table(table)
        .try_into()
        .map_err(|e| Error::Config(format!("invalid configuration: {e}")))?;
    config.pipeline.validate()?;
    Ok(config)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_hold_without_file_or_overrides() {
        let cfg = load_config(None, &[]).unwrap();
        assert_eq!(cfg.pipeline.bm25.k1, 0.9);
        assert_eq!(cfg.pipeline.bm25.b, 0.4);
        assert_eq!(cfg.pipeline.bm25.doc_prefix_len, 250);
        assert_eq!(cfg.pipeline.retrieval.top_k, 50);
        assert_eq!(cfg.pipeline.interaction.max_query_paragraphs, 54);
        assert_eq!(cfg.pipeline.interaction.max_candidate_paragraphs, 40);
        assert_eq!(cfg.pipeline.corpus.paragraph_len, 256);
        assert_eq!(cfg.pipeline.evaluation.cutoff, 5);
        assert_eq!(cfg.pipeline.aggregator.hidden, 128);
        assert_eq!(cfg.synth.pool_size, 200);
    }

    #[test]
    fn file_and_overrides_compose_with_flag_priority() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("plir.toml");
        std::fs::write(&path, "domain = \"legal\"\n[bm25]\nk1 = 1.5\nb = 0.3\n").unwrap();
        let cfg = load_config(
            Some(&path),
            &[
                ("bm25.k1".to_string(), "0.7".to_string()),
                ("aggregator.cell".to_string(), "lstm".to_string()),
            ],
        )
        .unwrap();
        assert_eq!(cfg.domain, "legal");
        assert_eq!(cfg.pipeline.bm25.k1, 0.7); // flag beats file
        assert_eq!(cfg.pipeline.bm25.b, 0.3); // file beats default
        assert_eq!(
            cfg.pipeline.aggregator.cell,
            plir_core::aggregator::RnnCellKind::Lstm
        );
    }

    #[test]
    fn unknown_override_key_is_rejected() {
        let err = load_config(None, &[("bm25.oops".into(), "1".into())]).unwrap_err();
        assert!(err.to_string().contains("unknown configuration key"));
    }

    #[test]
    fn invalid_value_is_a_config_error() {
        let err = load_config(None, &[("bm25.b".into(), "2.5".into())]).unwrap_err();
        assert!(matches!(err, Error::Config(_)));
    }

    #[test]
    fn every_override_key_parses_into_the_config() {
        // Exercise each registered key with a plausible value.
        for (key, _) in OVERRIDES {
            let value = match *key {
                "corpus.lowercase" => "false",
                "sampling.kind" => "random-k-per-positive",
                "aggregator.cell" => "lstm",
                "domain" | "tag" => "x",
                "out" => "somewhere",
                k if k.starts_with("paths.") => "some/file.txt",
                "bm25.k1" | "bm25.b" => "0.5",
                "evaluation.alpha" => "0.01",
                "evaluation.degenerate-f1" => "0.0",
                "synth.strong-relevant-fraction" | "synth.topic-density" => "0.5",
                "synth.test-fraction" => "0.25",
                "stage1.lr" | "aggregator.lr" => "0.001",
                _ => "8",
            };
            load_config(None, &[(key.to_string(), value.to_string())])
                .unwrap_or_else(|e| panic!("key {key}: {e}"));
        }
    }
}
