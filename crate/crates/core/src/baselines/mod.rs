//! Non-neural baselines: multinomial Naive Bayes on raw term counts and a
//! one-vs-rest linear SVM on TF-IDF vectors.

mod naive_bayes;
mod svm;

use std::path::Path;

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub use naive_bayes::{nb_fit, nb_predict, NaiveBayesModel, EMPTY_CLASS_LOG_PRIOR};
pub use svm::{svm_fit, svm_fit_with_history, svm_objective, svm_predict, LinearSvmModel};

pub const MODEL_FORMAT_VERSION: u32 = 1;

/// On-disk envelope for baseline models: the payload plus the fingerprint of
/// the vocabulary its dimensions refer to.
#[derive(Debug, Serialize, Deserialize)]
pub struct ModelFile<T> {
    pub version: u32,
    pub kind: String,
    pub vocab_hash: String,
    pub model: T,
}

pub fn save_model<T: Serialize>(path: impl AsRef<Path>, kind: &str, vocab_hash: &str, model: &T) -> Result<()> {
    let path = path.as_ref();
    let file = ModelFile {
        version: MODEL_FORMAT_VERSION,
        kind: kind.to_string(),
        vocab_hash: vocab_hash.to_string(),
        model,
    };
    let text = serde_json::to_string(&file)?;
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

/// Loads a model saved by [`save_model`], refusing files written for another
/// kind or vocabulary.
pub fn load_model<T: DeserializeOwned>(path: impl AsRef<Path>, kind: &str, vocab_hash: &str) -> Result<T> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let file: ModelFile<T> = serde_json::from_str(&text)?;
    if file.version != MODEL_FORMAT_VERSION {
        return Err(Error::Format(format!("unsupported model version {}", file.version)));
    }
    if file.kind != kind {
        return Err(Error::Format(format!("expected a {kind} model, found {}", file.kind)));
    }
    if file.vocab_hash != vocab_hash {
        return Err(Error::VocabMismatch {
            expected: file.vocab_hash,
            found: vocab_hash.to_string(),
        });
    }
    Ok(file.model)
}

/// Index of the largest score; ties go to the smaller index.
pub(crate) fn argmax(scores: &[f64]) -> usize {
    let mut best = 0;
    for (i, &s) in scores.iter().enumerate().skip(1) {
        if s > scores[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argmax_ties_to_smaller() {
        assert_eq!(argmax(&[1.0, 3.0, 3.0]), 1);
        assert_eq!(argmax(&[0.0]), 0);
    }

    #[test]
    fn envelope_guards() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("m.json");
        save_model(&path, "nb", "abc", &vec![1.0, 2.0]).unwrap();
        let v: Vec<f64> = load_model(&path, "nb", "abc").unwrap();
        assert_eq!(v, vec![1.0, 2.0]);
        assert!(matches!(
            load_model::<Vec<f64>>(&path, "nb", "xyz"),
            Err(Error::VocabMismatch { .. })
        ));
        assert!(matches!(load_model::<Vec<f64>>(&path, "svm", "abc"), Err(Error::Format(_))));
    }
}
