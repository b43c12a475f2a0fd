//! GRU encoders, attention pooling and the neural document classifiers.
//!
//! Four architectures share one [`Model`] type:
//!
//! * `embedding-bag`: mean word embedding, then a softmax layer;
//! * `deeptriage`: a bidirectional GRU over the flattened token stream, its
//!   final states through a tanh fully-connected layer, dropout, softmax;
//! * `han`: a word-level GRU with attention per sentence, then a
//!   sentence-level GRU with attention over the sentence vectors;
//! * `proposed`: several such hierarchical [`DeepAttentionBlock`] pairs of
//!   different sizes plus a shallow GRU over the flattened tokens, all
//!   document vectors concatenated before the softmax layer.
//!
//! Inputs are encoded documents (sentences of token ids). PAD tokens are
//! dropped before batching and padding inside a batch is masked out, so
//! outputs never depend on padding.

mod attention;
mod block;
mod checkpoint;
mod fragments;
mod gru;
mod model;
mod train;

pub use attention::{attention_pool, AttentionCache, AttentionPool};
pub use block::{BlockCache, DeepAttentionBlock};
pub use checkpoint::{load_checkpoint, save_checkpoint, ModelSidecar, SIDECAR_VERSION};
pub use fragments::{AttentionFragment, GruSequenceFragment, ModelFragment};
pub use gru::{concat_cols, encode_sequence, encode_sequence_backward, gru_step, split_cols, EncodedSequence, GruCell, GruStepCache, SequenceCache, StepMask};
pub use model::{build_model, normalize_document, predict, Architecture, ForwardCache, Model, ModelSpec};
pub use train::{accuracy_on, bucketed_batches, predict_many, train, EpochRecord, TrainConfig, TrainHistory};
