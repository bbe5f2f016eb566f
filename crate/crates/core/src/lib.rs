//! Two-stage long-document re-ranking engine.
//!
//! The pipeline retrieves a candidate pool with BM25 over an inverted index,
//! encodes every (query paragraph, candidate paragraph) pair into a relevance
//! vector, max-pools the resulting interaction matrix over the candidate
//! axis, and classifies the pooled sequence with an attention RNN. The
//! evaluation layer reproduces pooled binary metrics, cutoff-based ranking
//! baselines, paired significance tests, and the six-cell cross-domain
//! transfer grid.

pub mod aggregator;
pub mod binio;
pub mod bm25;
pub mod corpus;
pub mod error;
pub mod evaluation;
pub mod pipeline;
pub mod interaction;
pub mod optim;
pub mod pair_encoder;

pub use error::{Error, Result};
