//! Model bundle directory: `bundle.json` (metadata), `config.json`,
//! `vocab.json` and the model files written by [`Classifier::save`].

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use bugtag::bench::{BenchmarkConfig, CellOutcome, Classifier, Hyperparameters, Method, PreparedTask, Selection};
use bugtag::preprocess::Vocabulary;
use serde::{Deserialize, Serialize};

pub const BUNDLE_VERSION: u32 = 1;

#[derive(Debug, Serialize, Deserialize)]
pub struct BundleMeta {
    pub version: u32,
    pub method: Method,
    pub field: String,
    pub class_names: Vec<String>,
    pub vocab_hash: String,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub validation: Vec<CellOutcome>,
}

impl BundleMeta {
    pub fn new(method: Method, field: &str, prepared: &PreparedTask, seed: u64, selection: &Selection) -> Self {
        BundleMeta {
            version: BUNDLE_VERSION,
            method,
            field: field.to_string(),
            class_names: prepared.class_names.clone(),
            vocab_hash: prepared.vocab.fingerprint(),
            seed,
            hyperparameters: selection.hyperparameters.clone(),
            validation: selection.grid.cells.clone(),
        }
    }
}

pub struct Bundle {
    pub dir: PathBuf,
    pub meta: BundleMeta,
    pub config: BenchmarkConfig,
    pub vocab: Vocabulary,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

impl Bundle {
    pub fn write(dir: &Path, meta: &BundleMeta, config: &BenchmarkConfig, vocab: &Vocabulary, classifier: &Classifier) -> Result<()> {
        std::fs::write(dir.join("bundle.json"), serde_json::to_string_pretty(meta)?)?;
        std::fs::write(dir.join("config.json"), serde_json::to_string_pretty(config)?)?;
        std::fs::write(dir.join("vocab.json"), serde_json::to_string(vocab)?)?;
        classifier.save(dir, vocab, &meta.class_names)?;
        Ok(())
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let meta: BundleMeta = read_json(&dir.join("bundle.json"))?;
        if meta.version != BUNDLE_VERSION {
            bail!("unsupported bundle version {}", meta.version);
        }
        let vocab: Vocabulary = read_json(&dir.join("vocab.json"))?;
        if vocab.fingerprint() != meta.vocab_hash {
            bail!("{} does not match the vocabulary recorded in bundle.json", dir.join("vocab.json").display());
        }
        Ok(Bundle {
            dir: dir.to_path_buf(),
            config: read_json(&dir.join("config.json"))?,
            meta,
            vocab,
        })
    }

    pub fn classifier(&self) -> Result<Classifier> {
        Ok(Classifier::load(&self.dir, self.meta.method, &self.vocab)?)
    }
}
