//! One interface over the six methods: fitting from hyperparameters,
//! prediction and on-disk bundles.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::grid::{grid_search, CellOutcome, GridOutcome, GridSearchSpec, Hyperparameters};
use super::metrics::{accuracy, ConfusionMatrix};
use crate::baselines::{load_model, nb_fit, save_model, svm_fit, LinearSvmModel, NaiveBayesModel};
use crate::corpus::{seeded_partition, Document};
use crate::embeddings::EmbeddingTable;
use crate::features::{term_counts, SparseVector, TfidfModel};
use crate::preprocess::{encode, preprocess_document, EncodedDocument, PipelineConfig, ProcessedDocument, Vocabulary};
use crate::rng::Rng;
use crate::seqmodels::{build_model, load_checkpoint, predict_many, save_checkpoint, train, Architecture, Model, ModelSpec, TrainConfig};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Nb,
    Svm,
    EmbeddingBag,
    Deeptriage,
    Han,
    Proposed,
}

impl Method {
    pub const ALL: [Method; 6] = [
        Method::Nb,
        Method::Svm,
        Method::EmbeddingBag,
        Method::Deeptriage,
        Method::Han,
        Method::Proposed,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Method::Nb => "nb",
            Method::Svm => "svm",
            Method::EmbeddingBag => "embedding-bag",
            Method::Deeptriage => "deeptriage",
            Method::Han => "han",
            Method::Proposed => "proposed",
        }
    }

    /// Row label in rendered tables.
    pub fn label(self) -> &'static str {
        match self {
            Method::Nb => "Naive Bayes",
            Method::Svm => "TF-IDF + SVM",
            Method::EmbeddingBag => "Embedding bag (fastText-style)",
            Method::Deeptriage => "DeepTriage-style",
            Method::Han => "Hierarchical attention",
            Method::Proposed => "Multi-block attention + shallow",
        }
    }

    pub fn architecture(self) -> Option<Architecture> {
        match self {
            Method::Nb | Method::Svm => None,
            Method::EmbeddingBag => Some(Architecture::EmbeddingBag),
            Method::Deeptriage => Some(Architecture::Deeptriage),
            Method::Han => Some(Architecture::Han),
            Method::Proposed => Some(Architecture::Proposed),
        }
    }

    pub fn is_neural(self) -> bool {
        self.architecture().is_some()
    }

    /// Hyperparameter names accepted by [`fit_classifier`].
    pub fn hyperparameter_names(self) -> &'static [&'static str] {
        match self {
            Method::Nb => &["alpha"],
            Method::Svm => &["lambda", "epochs"],
            _ => &["learning_rate", "dropout", "epochs", "batch_size"],
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Method::ALL
            .into_iter()
            .find(|m| m.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown method {s:?}; expected one of nb, svm, embedding-bag, deeptriage, han, proposed")))
    }
}

/// A labeled document in every representation the methods consume.
#[derive(Debug, Clone, PartialEq)]
pub struct Example {
    pub id: String,
    pub processed: ProcessedDocument,
    pub encoded: EncodedDocument,
    pub counts: SparseVector,
    pub label: usize,
}

impl Example {
    pub fn from_document(doc: &Document, label: usize, pipeline: &PipelineConfig, vocab: &Vocabulary) -> Self {
        Example::from_processed(preprocess_document(doc, pipeline), label, vocab)
    }

    pub fn from_processed(processed: ProcessedDocument, label: usize, vocab: &Vocabulary) -> Self {
        Example {
            id: processed.doc_id.clone(),
            encoded: encode(&processed, vocab),
            counts: term_counts(&processed, vocab),
            processed,
            label,
        }
    }
}

/// Neural model shape and training defaults shared by the four
/// architectures.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NeuralOptions {
    pub block_sizes: Vec<usize>,
    pub han_size: usize,
    pub deeptriage_size: usize,
    pub shallow_size: usize,
    pub fc_width: usize,
    pub dropout: f64,
    pub attention_projection: bool,
    pub fine_tune_embeddings: bool,
    pub train: TrainConfig,
}

impl Default for NeuralOptions {
    fn default() -> Self {
        let spec = ModelSpec::default();
        NeuralOptions {
            block_sizes: spec.block_sizes,
            han_size: 64,
            deeptriage_size: 64,
            shallow_size: spec.shallow_size,
            fc_width: spec.fc_width,
            dropout: spec.dropout,
            attention_projection: spec.attention_projection,
            fine_tune_embeddings: spec.fine_tune_embeddings,
            train: TrainConfig::default(),
        }
    }
}

impl NeuralOptions {
    pub fn spec(&self, architecture: Architecture, num_classes: usize) -> ModelSpec {
        let block_sizes = match architecture {
            Architecture::Proposed => self.block_sizes.clone(),
            Architecture::Han => vec![self.han_size],
            Architecture::Deeptriage => vec![self.deeptriage_size],
            Architecture::EmbeddingBag => Vec::new(),
        };
        ModelSpec {
            architecture,
            block_sizes,
            shallow_size: self.shallow_size,
            fc_width: self.fc_width,
            dropout: self.dropout,
            num_classes,
            attention_projection: self.attention_projection,
            fine_tune_embeddings: self.fine_tune_embeddings,
        }
    }
}

/// What a fit needs besides the training examples.
#[derive(Debug, Clone, Copy)]
pub struct FitContext<'a> {
    pub vocab: &'a Vocabulary,
    pub num_classes: usize,
    pub embeddings: Option<&'a EmbeddingTable>,
    pub neural: &'a NeuralOptions,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Classifier {
    NaiveBayes(NaiveBayesModel),
    Svm { tfidf: TfidfModel, model: LinearSvmModel },
    Neural(Model),
}

fn softmax_scores(scores: &[f64]) -> Vec<f64> {
    let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let exp: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
    let sum: f64 = exp.iter().sum();
    exp.into_iter().map(|e| e / sum).collect()
}

fn argmax(p: &[f64]) -> usize {
    p.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &v)| if v > bv { (i, v) } else { (bi, bv) })
        .0
}

impl Classifier {
    pub fn method(&self) -> Method {
        match self {
            Classifier::NaiveBayes(_) => Method::Nb,
            Classifier::Svm { .. } => Method::Svm,
            Classifier::Neural(m) => match m.spec().architecture {
                Architecture::EmbeddingBag => Method::EmbeddingBag,
                Architecture::Deeptriage => Method::Deeptriage,
                Architecture::Han => Method::Han,
                Architecture::Proposed => Method::Proposed,
            },
        }
    }

    pub fn num_classes(&self) -> usize {
        match self {
            Classifier::NaiveBayes(m) => m.num_classes(),
            Classifier::Svm { model, .. } => model.num_classes(),
            Classifier::Neural(m) => m.num_classes(),
        }
    }

    /// Class scores normalized to sum to 1: the posterior for Naive Bayes
    /// and the neural models, a softmax over decision values for the SVM.
    pub fn predict_proba(&self, examples: &[Example]) -> Result<Vec<Vec<f64>>> {
        match self {
            Classifier::NaiveBayes(m) => Ok(examples.iter().map(|e| softmax_scores(&m.predict(&e.counts).1)).collect()),
            Classifier::Svm { tfidf, model } => examples
                .iter()
                .map(|e| model.predict(&tfidf.transform_counts(&e.counts)).map(|(_, s)| softmax_scores(&s)))
                .collect(),
            Classifier::Neural(m) => {
                let docs: Vec<EncodedDocument> = examples.iter().map(|e| e.encoded.clone()).collect();
                predict_many(m, &docs)
            }
        }
    }

    pub fn predict(&self, examples: &[Example]) -> Result<Vec<usize>> {
        Ok(self.predict_proba(examples)?.iter().map(|p| argmax(p)).collect())
    }

    pub fn confusion(&self, examples: &[Example]) -> Result<ConfusionMatrix> {
        let predicted = self.predict(examples)?;
        let truth: Vec<usize> = examples.iter().map(|e| e.label).collect();
        ConfusionMatrix::from_predictions(self.num_classes(), &truth, &predicted)
    }

    pub fn accuracy(&self, examples: &[Example]) -> Result<f64> {
        accuracy(&self.confusion(examples)?)
    }

    /// Writes the model files into `dir`: `model.json` for the baselines
    /// (plus `tfidf.json` for the SVM), `model.json` + `model.tbnk` for the
    /// neural models.
    pub fn save(&self, dir: impl AsRef<Path>, vocab: &Vocabulary, class_names: &[String]) -> Result<()> {
        let dir = dir.as_ref();
        let hash = vocab.fingerprint();
        match self {
            Classifier::NaiveBayes(m) => save_model(dir.join("model.json"), Method::Nb.tag(), &hash, m),
            Classifier::Svm { tfidf, model } => {
                tfidf.save(dir.join("tfidf.json"))?;
                save_model(dir.join("model.json"), Method::Svm.tag(), &hash, model)
            }
            Classifier::Neural(m) => save_checkpoint(m, class_names, dir.join("model.tbnk"), dir.join("model.json")),
        }
    }

    /// Inverse of [`Classifier::save`]; fails with a vocabulary mismatch if
    /// the files were written for another vocabulary.
    pub fn load(dir: impl AsRef<Path>, method: Method, vocab: &Vocabulary) -> Result<Self> {
        let dir = dir.as_ref();
        let hash = vocab.fingerprint();
        match method {
            Method::Nb => Ok(Classifier::NaiveBayes(load_model(dir.join("model.json"), method.tag(), &hash)?)),
            Method::Svm => Ok(Classifier::Svm {
                tfidf: TfidfModel::load(dir.join("tfidf.json"), vocab)?,
                model: load_model(dir.join("model.json"), method.tag(), &hash)?,
            }),
            _ => {
                let (model, _) = load_checkpoint(dir.join("model.tbnk"), dir.join("model.json"))?;
                if model.vocab_hash() != hash {
                    return Err(Error::VocabMismatch {
                        expected: model.vocab_hash().to_string(),
                        found: hash,
                    });
                }
                if model.spec().architecture != method.architecture().expect("neural method") {
                    return Err(Error::Format(format!("checkpoint holds a {} model, not {method}", model.spec().architecture)));
                }
                Ok(Classifier::Neural(model))
            }
        }
    }
}

fn check_names(method: Method, hp: &Hyperparameters) -> Result<()> {
    let allowed = method.hyperparameter_names();
    match hp.keys().find(|k| !allowed.contains(&k.as_str())) {
        Some(k) => Err(Error::invalid(format!("{method} has no hyperparameter {k:?}; expected one of {allowed:?}"))),
        None => Ok(()),
    }
}

fn positive_count(hp: &Hyperparameters, name: &str, default: usize) -> Result<usize> {
    match hp.get(name) {
        None => Ok(default),
        Some(&v) if v >= 1.0 && v.fract() == 0.0 => Ok(v as usize),
        Some(v) => Err(Error::invalid(format!("{name} must be a positive integer, got {v}"))),
    }
}

/// Fits `method` on `train` with the given hyperparameters; names missing
/// from `hp` take their defaults.
pub fn fit_classifier(method: Method, hp: &Hyperparameters, train_set: &[&Example], ctx: &FitContext, seed: u64) -> Result<Classifier> {
    check_names(method, hp)?;
    if train_set.is_empty() {
        return Err(Error::invalid(format!("{method} needs at least one training document")));
    }
    match method {
        Method::Nb => {
            let data: Vec<(SparseVector, usize)> = train_set.iter().map(|e| (e.counts.clone(), e.label)).collect();
            Ok(Classifier::NaiveBayes(nb_fit(&data, ctx.num_classes, hp.get("alpha").copied().unwrap_or(1.0))?))
        }
        Method::Svm => {
            let docs: Vec<ProcessedDocument> = train_set.iter().map(|e| e.processed.clone()).collect();
            let tfidf = TfidfModel::fit(&docs, ctx.vocab)?;
            let data: Vec<(SparseVector, usize)> = train_set.iter().map(|e| (tfidf.transform_counts(&e.counts), e.label)).collect();
            let lambda = hp.get("lambda").copied().unwrap_or(1e-4);
            let epochs = positive_count(hp, "epochs", 10)?;
            let model = svm_fit(&data, ctx.num_classes, lambda, epochs, seed)?;
            Ok(Classifier::Svm { tfidf, model })
        }
        _ => {
            let table = ctx
                .embeddings
                .ok_or_else(|| Error::invalid(format!("{method} needs word embeddings")))?;
            let mut spec = ctx.neural.spec(method.architecture().expect("neural method"), ctx.num_classes);
            if let Some(&p) = hp.get("dropout") {
                spec.dropout = p;
            }
            let mut config = ctx.neural.train.clone();
            config.seed = seed;
            if let Some(&lr) = hp.get("learning_rate") {
                config.optimizer.learning_rate = lr;
            }
            config.epochs = positive_count(hp, "epochs", config.epochs)?;
            config.batch_size = positive_count(hp, "batch_size", config.batch_size)?;
            let mut model = build_model(&spec, table, seed)?;
            let data: Vec<(EncodedDocument, usize)> = train_set.iter().map(|e| (e.encoded.clone(), e.label)).collect();
            let history = train(&mut model, &data, &config)?;
            log::debug!("{method}: best epoch {} of {}", history.best_epoch, history.epochs.len());
            Ok(Classifier::Neural(model))
        }
    }
}

/// Seed of grid cell `index` under the master `seed`.
pub fn cell_seed(seed: u64, index: usize) -> u64 {
    Rng::derive(seed, 1000 + index as u64).next_u64()
}

#[derive(Debug, Clone)]
pub struct Selection {
    pub classifier: Classifier,
    pub hyperparameters: Hyperparameters,
    pub grid: GridOutcome,
}

/// Grid search on a seeded validation split of `train_set`, then a refit of
/// the winning cell on all of `train_set`. A single-cell grid is fitted
/// directly and carries no validation score.
pub fn select_and_fit(
    method: Method,
    spec: &GridSearchSpec,
    train_set: &[Example],
    ctx: &FitContext,
    validation_fraction: f64,
    seed: u64,
) -> Result<Selection> {
    spec.validate()?;
    let cells = spec.cells();
    let all: Vec<&Example> = train_set.iter().collect();
    let grid = if cells.len() == 1 {
        check_names(method, &cells[0])?;
        GridOutcome {
            best: 0,
            cells: vec![CellOutcome {
                hyperparameters: cells[0].clone(),
                score: None,
                error: None,
            }],
        }
    } else {
        let (fit, validation) = seeded_partition(&all, validation_fraction, Rng::derive(seed, 2).next_u64())?;
        let validation: Vec<Example> = validation.into_iter().cloned().collect();
        grid_search(spec, |i, hp| {
            let clf = fit_classifier(method, hp, &fit, ctx, cell_seed(seed, i))?;
            clf.accuracy(&validation)
        })?
    };
    let hyperparameters = grid.best_hyperparameters().clone();
    let classifier = fit_classifier(method, &hyperparameters, &all, ctx, cell_seed(seed, grid.best))?;
    Ok(Selection {
        classifier,
        hyperparameters,
        grid,
    })
}
