//! Automated labeling of bug-tracker and support-ticket text.
//!
//! The crate bundles six classifiers behind one preprocessing pipeline:
//!
//! - multinomial Naive Bayes over term counts ([`baselines`]),
//! - one-vs-rest linear SVM over TF-IDF ([`features`], [`baselines`]),
//! - an embedding-bag classifier, a DeepTriage-style bidirectional GRU,
//!   a hierarchical attention network and a multi-block hierarchical
//!   attention network with a shallow side encoder ([`seqmodels`]).
//!
//! The neural models run on a small double-precision kernel with
//! hand-written backward passes ([`nncore`]) over skip-gram word
//! embeddings ([`embeddings`]). [`bench`] holds the metrics, grid search
//! and the benchmark runner that renders accuracy / weighted-F1 tables.

pub mod baselines;
pub mod bench;
pub mod corpus;
pub mod embeddings;
mod error;
pub mod features;
pub mod nncore;
pub mod preprocess;
pub mod rng;
pub mod seqmodels;

pub use error::{Error, Result};
