//! The attention RNN aggregator: a recurrent network (LSTM or GRU) over the
//! per-query-paragraph relevance sequence, additive attention over the hidden
//! states, and a two-class linear head.
//!
//! All gradients are exact backpropagation through time; the test suite and
//! the acceptance suite hold them to central finite differences at 1e-4
//! relative error in double precision.

mod model;
mod train;

pub use model::{AttentionRnnModel, ForwardTrace, RnnCellKind};
pub use train::{
    predict_relevance, train_aggregator, AggTrainingConfig, LabeledSequence, Prediction,
};
