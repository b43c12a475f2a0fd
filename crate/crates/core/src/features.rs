//! Sparse term-count and TF-IDF document vectors.
//!
//! Weights use raw term counts and the smoothed inverse document frequency
//! `idf(t) = ln((1 + N) / (1 + df(t))) + 1`, and every TF-IDF vector is
//! L2-normalized. Counts are taken over the whole document, not per sentence.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::preprocess::{ProcessedDocument, Vocabulary, PAD};
use crate::{Error, Result};

pub const TFIDF_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SparseVector {
    indices: Vec<usize>,
    values: Vec<f64>,
    dim: usize,
}

impl SparseVector {
    pub fn empty(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    /// Builds a vector from `(index, value)` pairs in any order; duplicate
    /// indices are summed and zeros dropped.
    pub fn from_pairs(dim: usize, pairs: impl IntoIterator<Item = (usize, f64)>) -> Result<Self> {
        let mut acc: BTreeMap<usize, f64> = BTreeMap::new();
        for (i, v) in pairs {
            if i >= dim {
                return Err(Error::invalid(format!("index {i} out of range for dimension {dim}")));
            }
            *acc.entry(i).or_default() += v;
        }
        let (indices, values) = acc.into_iter().filter(|&(_, v)| v != 0.0).unzip();
        Ok(SparseVector { indices, values, dim })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> f64 {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => 0.0,
        }
    }

    pub fn dot_dense(&self, dense: &[f64]) -> f64 {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    pub fn norm(&self) -> f64 {
        self.values.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn scale(&mut self, factor: f64) {
        for v in &mut self.values {
            *v *= factor;
        }
    }
}

pub fn term_counts(doc: &ProcessedDocument, vocab: &Vocabulary) -> SparseVector {
    SparseVector::from_pairs(
        vocab.len(),
        doc.tokens()
            .map(|t| vocab.id_or_oov(t))
            .filter(|&id| id != PAD)
            .map(|id| (id, 1.0)),
    )
    .expect("vocabulary ids are in range")
}

#[derive(Debug, Clone, PartialEq)]
pub struct TfidfModel {
    vocab: Vocabulary,
    idf: Vec<f64>,
    doc_count: usize,
}

#[derive(Serialize, Deserialize)]
struct TfidfFile {
    version: u32,
    doc_count: usize,
    vocab_hash: String,
    idf: Vec<f64>,
}

impl TfidfModel {
    pub fn fit(docs: &[ProcessedDocument], vocab: &Vocabulary) -> Result<Self> {
        if docs.is_empty() {
            return Err(Error::invalid("cannot fit TF-IDF on an empty corpus"));
        }
        let mut df = vec![0usize; vocab.len()];
        for doc in docs {
            for &id in term_counts(doc, vocab).indices() {
                df[id] += 1;
            }
        }
        let n = docs.len() as f64;
        let idf = df
            .iter()
            .map(|&d| ((1.0 + n) / (1.0 + d as f64)).ln() + 1.0)
            .collect();
        Ok(TfidfModel {
            vocab: vocab.clone(),
            idf,
            doc_count: docs.len(),
        })
    }

    pub fn idf(&self) -> &[f64] {
        &self.idf
    }

    pub fn doc_count(&self) -> usize {
        self.doc_count
    }

    pub fn vocabulary(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn transform(&self, doc: &ProcessedDocument) -> SparseVector {
        self.transform_counts(&term_counts(doc, &self.vocab))
    }

    pub fn transform_counts(&self, counts: &SparseVector) -> SparseVector {
        let mut v = SparseVector {
            indices: counts.indices.clone(),
            values: counts
                .iter()
                .map(|(i, c)| c * self.idf[i])
                .collect(),
            dim: counts.dim,
        };
        let norm = v.norm();
        if norm > 0.0 {
            v.scale(1.0 / norm);
        }
        v
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(&TfidfFile {
            version: TFIDF_FORMAT_VERSION,
            doc_count: self.doc_count,
            vocab_hash: self.vocab.fingerprint(),
            idf: self.idf.clone(),
        })?)
    }

    /// Restores a model saved with [`TfidfModel::to_json`]; the vocabulary
    /// must be the one it was fitted with.
    pub fn from_json(text: &str, vocab: &Vocabulary) -> Result<Self> {
        let file: TfidfFile = serde_json::from_str(text)?;
        if file.version != TFIDF_FORMAT_VERSION {
            return Err(Error::Format(format!("unsupported TF-IDF version {}", file.version)));
        }
        if file.vocab_hash != vocab.fingerprint() {
            return Err(Error::VocabMismatch {
                expected: file.vocab_hash,
                found: vocab.fingerprint(),
            });
        }
        if file.idf.len() != vocab.len() {
            return Err(Error::Format(format!(
                "idf length {} does not match vocabulary size {}",
                file.idf.len(),
                vocab.len()
            )));
        }
        Ok(TfidfModel {
            vocab: vocab.clone(),
            idf: file.idf,
            doc_count: file.doc_count,
        })
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>, vocab: &Vocabulary) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text, vocab)
    }
}

pub fn fit_tfidf(docs: &[ProcessedDocument], vocab: &Vocabulary) -> Result<TfidfModel> {
    TfidfModel::fit(docs, vocab)
}

pub fn transform_tfidf(doc: &ProcessedDocument, model: &TfidfModel) -> SparseVector {
    model.transform(doc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::{OOV, OOV_TOKEN};
    use proptest::prelude::*;

    fn doc(tokens: &[&str]) -> ProcessedDocument {
        ProcessedDocument {
            doc_id: "d".into(),
            sentences: vec![tokens.iter().map(|t| t.to_string()).collect()],
        }
    }

    #[test]
    fn counts() {
        let v = Vocabulary::from_tokens(["a", "b"]);
        let c = term_counts(&doc(&["a", "b", "a"]), &v);
        assert_eq!(c.indices(), &[2, 3]);
        assert_eq!(c.values(), &[2.0, 1.0]);
        let empty = ProcessedDocument { doc_id: "e".into(), sentences: vec![] };
        assert!(term_counts(&empty, &v).is_empty());
        let unknown = term_counts(&doc(&["x", "y", "z", "x"]), &v);
        assert_eq!(unknown.iter().collect::<Vec<_>>(), vec![(OOV, 4.0)]);
        let placeholder = term_counts(&doc(&[OOV_TOKEN]), &v);
        assert_eq!(placeholder.iter().collect::<Vec<_>>(), vec![(OOV, 1.0)]);
    }

    #[test]
    fn idf_values() {
        let v = Vocabulary::from_tokens(["all", "one", "never"]);
        let docs = [doc(&["all", "one"]), doc(&["all"]), doc(&["all", "all"])];
        let m = fit_tfidf(&docs, &v).unwrap();
        let all = v.id("all").unwrap();
        assert!((m.idf()[all] - 1.0).abs() < 1e-12);
        assert!((m.idf()[v.id("one").unwrap()] - 1.6931).abs() < 1e-4);
        assert!((m.idf()[v.id("never").unwrap()] - 2.3863).abs() < 1e-4);
        assert!(m.idf().iter().all(|&x| x > 0.0));
        assert!(fit_tfidf(&[], &v).is_err());
    }

    #[test]
    fn transform_examples() {
        let v = Vocabulary::from_tokens(["a", "b"]);
        let docs = [doc(&["a", "b"])];
        let m = fit_tfidf(&docs, &v).unwrap();
        let single = transform_tfidf(&doc(&["a", "a"]), &m);
        assert_eq!(single.values(), &[1.0]);
        let pair = transform_tfidf(&doc(&["a", "b"]), &m);
        for x in pair.values() {
            assert!((x - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        }
        let empty = ProcessedDocument { doc_id: "e".into(), sentences: vec![] };
        assert!(transform_tfidf(&empty, &m).is_empty());
    }

    #[test]
    fn json_round_trip_checks_vocab() {
        let v = Vocabulary::from_tokens(["a", "b"]);
        let m = fit_tfidf(&[doc(&["a"]), doc(&["b", "a"])], &v).unwrap();
        let text = m.to_json().unwrap();
        let parsed: serde_json::Value = serde_json::from_str(&text).unwrap();
        assert_eq!(parsed["version"], 1);
        assert_eq!(parsed["doc_count"], 2);
        let back = TfidfModel::from_json(&text, &v).unwrap();
        assert_eq!(back.idf(), m.idf());
        let other = Vocabulary::from_tokens(["b", "a"]);
        assert!(matches!(
            TfidfModel::from_json(&text, &other),
            Err(Error::VocabMismatch { .. })
        ));
    }

    #[test]
    fn from_pairs_rejects_out_of_range() {
        assert!(SparseVector::from_pairs(3, [(3, 1.0)]).is_err());
        let v = SparseVector::from_pairs(5, [(4, 1.0), (1, 2.0), (4, -1.0)]).unwrap();
        assert_eq!(v.indices(), &[1]);
    }

    proptest! {
        #[test]
        fn normalized_and_monotone(
            corpus in proptest::collection::vec(proptest::collection::vec(0usize..6, 0..8), 1..6),
            probe in proptest::collection::vec(0usize..6, 1..8),
        ) {
            let names = ["t0", "t1", "t2", "t3", "t4", "t5"];
            let vocab = Vocabulary::from_tokens(names);
            let docs: Vec<_> = corpus.iter().map(|d| doc(&d.iter().map(|&i| names[i]).collect::<Vec<_>>())).collect();
            let model = fit_tfidf(&docs, &vocab).unwrap();
            for d in &docs {
                let v = model.transform(d);
                prop_assert!(v.values().iter().all(|x| x.is_finite()));
                if !v.is_empty() {
                    prop_assert!((v.norm() - 1.0).abs() < 1e-9);
                }
            }
            // doubling one term's count doubles its raw (pre-normalization) score
            let counts = term_counts(&doc(&probe.iter().map(|&i| names[i]).collect::<Vec<_>>()), &vocab);
            let target = counts.indices()[0];
            let doubled = SparseVector::from_pairs(counts.dim(), counts.iter().map(|(i, c)| (i, if i == target { 2.0 * c } else { c }))).unwrap();
            let raw = |c: &SparseVector| c.get(target) * model.idf()[target];
            prop_assert!((raw(&doubled) - 2.0 * raw(&counts)).abs() < 1e-12);
        }
    }
}
