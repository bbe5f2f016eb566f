//! Synthetic retrieval benchmark generator.
//!
//! Stands in for gated legal/patent collections at desk scale. Every query
//! owns a disjoint slice of topic terms and a per-term weight distribution;
//! relevant candidates share a dense topical paragraph with the query, while
//! non-relevant candidates are drawn from a common background distribution.
//!
//! The generated pools are deliberately not solvable by first-stage scoring
//! alone:
//! - *strong* relevant docs carry the topical paragraph up front, inside the
//!   prefix an index sees;
//! - *weak* relevant docs bury the topical paragraph past the first window
//!   and expose only a light sprinkle of topic terms up front;
//! - *distractor* docs are non-relevant but salt their first paragraph with a
//!   medium dose of topic terms, so they outrank weak relevants early on.
//!
//! A prefix-truncated scorer still pulls all relevant docs into a generous
//! top-K pool (the sprinkle beats the background), but its top-5 precision is
//! capped, which is exactly the gap paragraph-level re-ranking has to close.

use std::path::Path;

use rand::distributions::{Distribution, WeightedIndex};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::io::CorpusRecord;
use super::{CandidatePool, ParaRef, ParagraphTask, QrelSet, SplitSpec};
use crate::error::{Error, Result};

/// Fewest background word types required to keep topic terms separable.
const MIN_BACKGROUND_TERMS: usize = 64;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SyntheticConfig {
    pub seed: u64,
    pub n_queries: usize,
    /// Candidates per query pool.
    pub pool_size: usize,
    /// Relevant documents per query (exact).
    pub n_relevant_per_query: usize,
    /// Word types available to the generator.
    pub vocab_size: usize,
    /// Nominal document length; actual lengths vary around it.
    pub doc_len_tokens: usize,
    /// Paragraph window used to align injected paragraphs.
    pub paragraph_len: usize,
    /// Topic terms owned by each query.
    pub topic_terms_per_query: usize,
    /// Non-relevant pool docs salted with this query's topic terms.
    pub distractors_per_query: usize,
    /// Fraction of relevant docs whose topical paragraph is paragraph 0.
    pub strong_relevant_fraction: f64,
    /// Topic-term density inside an injected topical paragraph.
    pub topic_density: f64,
    /// Topic tokens sprinkled into a weak relevant doc's first paragraph.
    pub weak_topic_tokens: usize,
    /// Topic tokens sprinkled into a distractor's first paragraph.
    pub distractor_topic_tokens: usize,
    /// Candidate paragraphs per stage-1 task (relevant ones included).
    pub para_pool_size: usize,
    /// Relevant paragraphs per stage-1 task.
    pub para_relevants_per_task: usize,
    /// Fraction of queries held out as the test split.
    pub test_fraction: f64,
}

impl Default for SyntheticConfig {
    fn default() -> Self {
        SyntheticConfig {
            seed: 7,
            n_queries: 50,
            pool_size: 200,
            n_relevant_per_query: 5,
            vocab_size: 2000,
            doc_len_tokens: 600,
            paragraph_len: super::DEFAULT_PARAGRAPH_LEN,
            topic_terms_per_query: 16,
            distractors_per_query: 12,
            strong_relevant_fraction: 0.4,
            topic_density: 0.7,
            weak_topic_tokens: 6,
            distractor_topic_tokens: 20,
            para_pool_size: 32,
            para_relevants_per_task: 1,
            test_fraction: 0.2,
        }
    }
}

impl SyntheticConfig {
    fn validate(&self) -> Result<()> {
        let positive = [
            ("n_queries", self.n_queries),
            ("pool_size", self.pool_size),
            ("n_relevant_per_query", self.n_relevant_per_query),
            ("vocab_size", self.vocab_size),
            ("doc_len_tokens", self.doc_len_tokens),
            ("paragraph_len", self.paragraph_len),
            ("topic_terms_per_query", self.topic_terms_per_query),
            ("para_pool_size", self.para_pool_size),
            ("para_relevants_per_task", self.para_relevants_per_task),
        ];
        for (name, value) in positive {
            if value == 0 {
                return Err(Error::Config(format!("{name} must be positive")));
            }
        }
        if self.n_relevant_per_query >= self.pool_size {
            return Err(Error::Config(format!(
                "n_relevant_per_query ({}) must be smaller than pool_size ({})",
                self.n_relevant_per_query, self.pool_size
            )));
        }
        if self.n_relevant_per_query + self.distractors_per_query > self.pool_size {
            return Err(Error::Config(
                "pool_size must cover relevant docs plus distractors".into(),
            ));
        }
        let needed = self.n_queries * self.topic_terms_per_query + MIN_BACKGROUND_TERMS;
        if self.vocab_size < needed {
            return Err(Error::Config(format!(
                "vocabulary of {} word types is too small to separate {} topic terms per query \
                 from the background; need at least {needed}",
                self.vocab_size, self.topic_terms_per_query
            )));
        }
        if self.doc_len_tokens < 2 * self.paragraph_len {
            return Err(Error::Config(format!(
                "doc_len_tokens ({}) must span at least two paragraphs ({})",
                self.doc_len_tokens,
                2 * self.paragraph_len
            )));
        }
        if self.para_relevants_per_task > self.n_relevant_per_query {
            return Err(Error::Config(
                "para_relevants_per_task cannot exceed n_relevant_per_query".into(),
            ));
        }
        if !(0.0..=1.0).contains(&self.strong_relevant_fraction) {
            return Err(Error::Config(
                "strong_relevant_fraction must be in [0, 1]".into(),
            ));
        }
        if !(self.topic_density > 0.0 && self.topic_density <= 1.0) {
            return Err(Error::Config("topic_density must be in (0, 1]".into()));
        }
        if !(self.test_fraction > 0.0 && self.test_fraction < 1.0) {
            return Err(Error::Config("test_fraction must be in (0, 1)".into()));
        }
        Ok(())
    }
}

/// Everything the generator produces for one domain.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticBenchmark {
    pub corpus: Vec<CorpusRecord>,
    pub qrels: QrelSet,
    pub pools: CandidatePool,
    pub para_tasks: Vec<ParagraphTask>,
    pub train_queries: Vec<String>,
    pub test_queries: Vec<String>,
    /// Task ids of the paragraph collection's own train/test split. This
    /// split is independent of the document-level query split: the paragraph
    /// entailment data is a separate collection, so its tasks cover training
    /// and held-out document queries alike.
    pub para_train_tasks: Vec<String>,
    pub para_test_tasks: Vec<String>,
}

struct TopicModel {
    /// Indices into the generator word list owned by this query.
    terms: Vec<usize>,
    weights: WeightedIndex<f64>,
}

struct Generator {
    cfg: SyntheticConfig,
    rng: ChaCha8Rng,
    words: Vec<String>,
    topics: Vec<TopicModel>,
    n_background: usize,
}

impl Generator {
    fn new(cfg: &SyntheticConfig) -> Result<Self> {
        cfg.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
        let words: Vec<String> = (0..cfg.vocab_size).map(|i| format!("w{i:05}")).collect();
        let n_topic_total = cfg.n_queries * cfg.topic_terms_per_query;
        let n_background = cfg.vocab_size - n_topic_total;
        let mut topics = Vec::with_capacity(cfg.n_queries);
        for qi in 0..cfg.n_queries {
            let start = n_background + qi * cfg.topic_terms_per_query;
            let terms: Vec<usize> = (start..start + cfg.topic_terms_per_query).collect();
            let raw: Vec<f64> = (0..terms.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
            let weights = WeightedIndex::new(&raw)
                .map_err(|e| Error::Config(format!("bad topic weights: {e}")))?;
            topics.push(TopicModel { terms, weights });
        }
        Ok(Generator {
            cfg: cfg.clone(),
            rng,
            words,
            topics,
            n_background,
        })
    }

    fn background_token(&mut self) -> usize {
        self.rng.gen_range(0..self.n_background)
    }

    fn topic_token(&mut self, query: usize) -> usize {
        let topic = &self.topics[query];
        let slot = topic.weights.sample(&mut self.rng);
        topic.terms[slot]
    }

    fn doc_len(&mut self) -> usize {
        let lo = (self.cfg.doc_len_tokens * 4) / 5;
        let hi = (self.cfg.doc_len_tokens * 6) / 5;
        let min_len = 2 * self.cfg.paragraph_len + self.cfg.paragraph_len / 4;
        self.rng.gen_range(lo..=hi).max(min_len)
    }

    /// Compose a document of exactly `len` tokens. `topical` fills one
    /// paragraph from the query's topic distribution; `sprinkle` overwrites
    /// that many positions of paragraph 0 with topic tokens.
    fn compose(
        &mut self,
        len: usize,
        topical: Option<(usize, usize)>,
        sprinkle: Option<(usize, usize)>,
    ) -> Vec<usize> {
        let plen = self.cfg.paragraph_len;
        let mut tokens: Vec<usize> = (0..len).map(|_| self.background_token()).collect();
        if let Some((query, para)) = topical {
            let start = para * plen;
            let end = (start + plen).min(len);
            debug_assert!(start < len, "topical paragraph out of range");
            for i in start..end {
                if self.rng.gen_bool(self.cfg.topic_density) {
                    tokens[i] = self.topic_token(query);
                }
            }
        }
        if let Some((query, count)) = sprinkle {
            let first_end = plen.min(len);
            let picked =
                rand::seq::index::sample(&mut self.rng, first_end, count.min(first_end));
            let mut positions: Vec<usize> = picked.iter().collect();
            positions.sort_unstable();
            for pos in positions {
                tokens[pos] = self.topic_token(query);
            }
        }
        tokens
    }

    fn render(&self, tokens: &[usize]) -> String {
        let mut text = String::with_capacity(tokens.len() * 7);
        for (i, &t) in tokens.iter().enumerate() {
            if i > 0 {
                text.push(' ');
            }
            text.push_str(&self.words[t]);
        }
        text
    }
}

/// Generate a complete synthetic benchmark. Byte-identical output for a
/// fixed configuration.
pub fn generate_synthetic_benchmark(cfg: &SyntheticConfig) -> Result<SyntheticBenchmark> {
    let mut g = Generator::new(cfg)?;
    let plen = cfg.paragraph_len;

    let mut corpus: Vec<CorpusRecord> = Vec::new();
    let mut qrels = QrelSet::new();
    let mut pools = CandidatePool::new();
    let mut para_tasks: Vec<ParagraphTask> = Vec::new();

    // Shared background documents; every pool samples its filler from here.
    let n_filler = cfg.pool_size - cfg.n_relevant_per_query - cfg.distractors_per_query;
    let n_background_docs = (2 * n_filler).max(4);
    let mut background_ids = Vec::with_capacity(n_background_docs);
    let mut background_paras: Vec<ParaRef> = Vec::new();
    for bi in 0..n_background_docs {
        let id = format!("bg{bi:05}");
        let len = g.doc_len();
        let tokens = g.compose(len, None, None);
        for p in 0..len.div_ceil(plen) {
            background_paras.push(ParaRef::new(id.clone(), p));
        }
        corpus.push(CorpusRecord {
            id: id.clone(),
            text: g.render(&tokens),
        });
        background_ids.push(id);
    }

    let n_strong = ((cfg.strong_relevant_fraction * cfg.n_relevant_per_query as f64).round()
        as usize)
        .min(cfg.n_relevant_per_query);

    for qi in 0..cfg.n_queries {
        let query_id = format!("q{qi:04}");
        let q_len = g.doc_len();
        let q_tokens = g.compose(q_len, Some((qi, 0)), None);
        corpus.push(CorpusRecord {
            id: query_id.clone(),
            text: g.render(&q_tokens),
        });

        let mut pool_ids: Vec<String> = Vec::with_capacity(cfg.pool_size);
        // The topical paragraph of each relevant doc, in generation order.
        let mut relevant_topical: Vec<ParaRef> = Vec::new();
        // Non-topical paragraphs of relevant docs (negative-sample material).
        let mut relevant_background: Vec<ParaRef> = Vec::new();

        for ri in 0..cfg.n_relevant_per_query {
            let id = format!("dq{qi:04}r{ri}");
            let len = g.doc_len();
            let n_paras = len.div_ceil(plen);
            let (topical_para, sprinkle) = if ri < n_strong {
                (0, None)
            } else {
                (
                    g.rng.gen_range(1..n_paras),
                    Some((qi, cfg.weak_topic_tokens)),
                )
            };
            let tokens = g.compose(len, Some((qi, topical_para)), sprinkle);
            corpus.push(CorpusRecord {
                id: id.clone(),
                text: g.render(&tokens),
            });
            relevant_topical.push(ParaRef::new(id.clone(), topical_para));
            for p in 0..n_paras {
                if p != topical_para {
                    relevant_background.push(ParaRef::new(id.clone(), p));
                }
            }
            qrels.insert(&query_id, &id);
            pool_ids.push(id);
        }

        let mut distractor_paras: Vec<ParaRef> = Vec::new();
        for di in 0..cfg.distractors_per_query {
            let id = format!("dq{qi:04}x{di}");
            let len = g.doc_len();
            let tokens = g.compose(len, None, Some((qi, cfg.distractor_topic_tokens)));
            corpus.push(CorpusRecord {
                id: id.clone(),
                text: g.render(&tokens),
            });
            distractor_paras.push(ParaRef::new(id.clone(), 0));
            pool_ids.push(id);
        }

        // Fill the pool with shared background docs, sampled per query.
        let mut filler = background_ids.clone();
        filler.shuffle(&mut g.rng);
        let filler: Vec<String> = filler.into_iter().take(n_filler).collect();
        pool_ids.extend(filler.iter().cloned());
        pool_ids.shuffle(&mut g.rng);
        for id in &pool_ids {
            pools.push(&query_id, id)?;
        }

        // Stage-1 paragraph task: the query's topical paragraph against a
        // pool of relevant, distractor and background paragraphs.
        let relevant: Vec<ParaRef> = relevant_topical
            .iter()
            .take(cfg.para_relevants_per_task)
            .cloned()
            .collect();
        let mut pool: Vec<ParaRef> = relevant.clone();
        let n_negatives = cfg.para_pool_size.saturating_sub(pool.len());
        let n_distractor_paras = (n_negatives / 4).min(distractor_paras.len());
        pool.extend(distractor_paras.iter().take(n_distractor_paras).cloned());
        let mut fill: Vec<ParaRef> = relevant_background.clone();
        let mut bg_pool = background_paras.clone();
        bg_pool.shuffle(&mut g.rng);
        fill.extend(bg_pool);
        for para in fill {
            if pool.len() >= cfg.para_pool_size {
                break;
            }
            if !pool.contains(&para) {
                pool.push(para);
            }
        }
        pool.shuffle(&mut g.rng);
        para_tasks.push(ParagraphTask {
            query_id: format!("{query_id}#0"),
            query: ParaRef::new(query_id.clone(), 0),
            pool,
            relevant: relevant.into_iter().collect(),
        });
    }

    let query_ids: Vec<String> = (0..cfg.n_queries).map(|qi| format!("q{qi:04}")).collect();
    let (train_queries, test_queries) = super::split_validation(
        &query_ids,
        &SplitSpec {
            validation_fraction: cfg.test_fraction,
            seed: cfg.seed.wrapping_add(1),
        },
    )?;

    let task_ids: Vec<String> = para_tasks.iter().map(|t| t.query_id.clone()).collect();
    let (para_train_tasks, para_test_tasks) = if task_ids.len() >= 5 {
        super::split_validation(
            &task_ids,
            &SplitSpec {
                validation_fraction: cfg.test_fraction,
                seed: cfg.seed.wrapping_add(2),
            },
        )?
    } else {
        (task_ids, Vec::new())
    };

    Ok(SyntheticBenchmark {
        corpus,
        qrels,
        pools,
        para_tasks,
        train_queries,
        test_queries,
        para_train_tasks,
        para_test_tasks,
    })
}

/// File names used when a benchmark is materialized in a directory.
pub mod files {
    pub const CORPUS: &str = "corpus.jsonl";
    pub const QRELS: &str = "qrels.txt";
    pub const POOLS: &str = "pools.txt";
    pub const PARA_QRELS: &str = "para-qrels.txt";
    pub const PARA_POOLS: &str = "para-pools.txt";
    pub const TRAIN_QUERIES: &str = "queries-train.txt";
    pub const TEST_QUERIES: &str = "queries-test.txt";
    pub const PARA_TRAIN_TASKS: &str = "para-tasks-train.txt";
    pub const PARA_TEST_TASKS: &str = "para-tasks-test.txt";
}

/// Write all benchmark files into `dir` using the standard names.
pub fn write_benchmark(bench: &SyntheticBenchmark, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    super::io::write_corpus(&bench.corpus, &dir.join(files::CORPUS))?;
    super::io::write_qrels(&bench.qrels, &dir.join(files::QRELS))?;
    super::io::write_pools(&bench.pools, &dir.join(files::POOLS))?;
    super::io::write_paragraph_tasks(
        &bench.para_tasks,
        &dir.join(files::PARA_QRELS),
        &dir.join(files::PARA_POOLS),
    )?;
    super::io::write_query_list(&bench.train_queries, &dir.join(files::TRAIN_QUERIES))?;
    super::io::write_query_list(&bench.test_queries, &dir.join(files::TEST_QUERIES))?;
    super::io::write_query_list(&bench.para_train_tasks, &dir.join(files::PARA_TRAIN_TASKS))?;
    super::io::write_query_list(&bench.para_test_tasks, &dir.join(files::PARA_TEST_TASKS))?;
    Ok(())
}

/// Load a benchmark previously written with [`write_benchmark`].
pub fn read_benchmark(dir: &Path) -> Result<SyntheticBenchmark> {
    Ok(SyntheticBenchmark {
        corpus: super::io::read_corpus(&dir.join(files::CORPUS))?,
        qrels: super::io::read_qrels(&dir.join(files::QRELS))?,
        pools: super::io::read_pools(&dir.join(files::POOLS))?,
        para_tasks: super::io::read_paragraph_tasks(
            &dir.join(files::PARA_QRELS),
            &dir.join(files::PARA_POOLS),
        )?,
        train_queries: super::io::read_query_list(&dir.join(files::TRAIN_QUERIES))?,
        test_queries: super::io::read_query_list(&dir.join(files::TEST_QUERIES))?,
        para_train_tasks: super::io::read_query_list(&dir.join(files::PARA_TRAIN_TASKS))?,
        para_test_tasks: super::io::read_query_list(&dir.join(files::PARA_TEST_TASKS))?,
    })
}

/// A small configuration for fast tests.
pub fn small_config(seed: u64) -> SyntheticConfig {
    SyntheticConfig {
        seed,
        n_queries: 8,
        pool_size: 30,
        n_relevant_per_query: 3,
        vocab_size: 400,
        doc_len_tokens: 160,
        paragraph_len: 64,
        topic_terms_per_query: 8,
        distractors_per_query: 5,
        para_pool_size: 16,
        ..SyntheticConfig::default()
    }
}
