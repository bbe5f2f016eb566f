//! Stage 1: paragraph-pair relevance encoding.
//!
//! A trainable micro-encoder maps a (query paragraph, candidate paragraph)
//! pair to a fixed-dimension relevance vector and a binary relevance
//! probability. It is the desk-scale stand-in for a fine-tuned language
//! model: the contract is identical (one vector summarizes pair relevance,
//! trained end-to-end on paragraph entailment), only the encoder inside is
//! small. Externally computed pair vectors can be imported instead through
//! [`ExternalVectorStore`], so a heavyweight encoder can drive stage 2
//! without being linked in.

mod dataset;
mod model;
mod train;
mod vectors;

pub use dataset::{
    build_stage1_dataset, CorpusIndex, NegativeSamplingStrategy, SamplingKind, Stage1Example,
};
pub use model::{EncoderConfig, MicroEncoder};
pub use train::{stage1_f1, train_stage1, EpochLog, PrfScores, Stage1TrainConfig};
pub(crate) use train::prf;
pub use vectors::ExternalVectorStore;
