//! Labeled ticket datasets and seeded train/test splits.
//!
//! Datasets are UTF-8 JSON-lines files, one record per line:
//!
//! ```text
//! {"id": "FS#123", "title": "...", "content": "...", "labels": {"priority": "P2_low"}}
//! ```
//!
//! A record may omit any label field; it is then left out of every task on
//! that field.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Document {
    pub id: String,
    pub title: String,
    #[serde(rename = "content")]
    pub body: String,
    #[serde(default)]
    pub labels: BTreeMap<String, String>,
}

impl Document {
    pub fn label(&self, field: &str) -> Option<&str> {
        self.labels.get(field).map(String::as_str)
    }
}

/// Ordered class inventory of one label field.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(from = "Vec<String>", into = "Vec<String>")]
pub struct ClassSet {
    names: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl ClassSet {
    /// Builds a class set from distinct names; duplicates are dropped and
    /// the names are sorted.
    pub fn new<I, S>(names: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut names: Vec<String> = names.into_iter().map(Into::into).collect();
        names.sort();
        names.dedup();
        Self::from(names)
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn id(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn name(&self, id: usize) -> Option<&str> {
        self.names.get(id).map(String::as_str)
    }
}

impl From<Vec<String>> for ClassSet {
    /// Keeps the given order; callers are responsible for uniqueness.
    fn from(names: Vec<String>) -> Self {
        let index = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.clone(), i))
            .collect();
        ClassSet { names, index }
    }
}

impl From<ClassSet> for Vec<String> {
    fn from(set: ClassSet) -> Self {
        set.names
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    pub documents: Vec<Document>,
    pub fields: BTreeMap<String, ClassSet>,
}

#[derive(Deserialize)]
struct RawRecord {
    id: String,
    #[serde(default)]
    title: String,
    #[serde(default)]
    content: String,
    #[serde(default)]
    labels: BTreeMap<String, String>,
}

impl Dataset {
    /// Builds a dataset from in-memory documents. Label values are trimmed;
    /// when `schema` is non-empty only those fields are kept.
    pub fn from_documents(documents: Vec<Document>, schema: &[String]) -> Result<Self> {
        let mut seen = HashSet::new();
        let mut out = Vec::with_capacity(documents.len());
        for (i, mut doc) in documents.into_iter().enumerate() {
            if doc.id.trim().is_empty() {
                return Err(Error::invalid(format!("document {} has an empty id", i + 1)));
            }
            if !seen.insert(doc.id.clone()) {
                return Err(Error::DuplicateId {
                    id: doc.id,
                    line: i + 1,
                });
            }
            doc.labels = doc
                .labels
                .into_iter()
                .filter(|(k, _)| schema.is_empty() || schema.contains(k))
                .map(|(k, v)| (k, v.trim().to_string()))
                .collect();
            out.push(doc);
        }
        let mut observed: BTreeMap<String, Vec<String>> = BTreeMap::new();
        for field in schema {
            observed.entry(field.clone()).or_default();
        }
        for doc in &out {
            for (k, v) in &doc.labels {
                observed.entry(k.clone()).or_default().push(v.clone());
            }
        }
        let mut fields = BTreeMap::new();
        for (field, values) in observed {
            if values.is_empty() {
                return Err(Error::UnknownField(field));
            }
            fields.insert(field, ClassSet::new(values));
        }
        Ok(Dataset {
            documents: out,
            fields,
        })
    }

    pub fn class_set(&self, field: &str) -> Result<&ClassSet> {
        self.fields
            .get(field)
            .ok_or_else(|| Error::UnknownField(field.to_string()))
    }

    pub fn get(&self, id: &str) -> Option<&Document> {
        self.documents.iter().find(|d| d.id == id)
    }

    /// Documents labeled for `field`, paired with their class ids, in load order.
    pub fn labeled(&self, field: &str) -> Result<Vec<(&Document, usize)>> {
        let classes = self.class_set(field)?;
        Ok(self
            .documents
            .iter()
            .filter_map(|d| {
                let label = d.label(field)?;
                Some((d, classes.id(label).expect("class closure")))
            })
            .collect())
    }
}

/// Loads a JSON-lines dataset. Blank lines are skipped; `schema` restricts
/// the label fields kept (empty keeps every observed field).
pub fn load_dataset(path: impl AsRef<Path>, schema: &[String]) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut documents = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let lineno = i + 1;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let raw: RawRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: lineno,
            message: e.to_string(),
        })?;
        if raw.id.trim().is_empty() {
            return Err(Error::Parse {
                path: path.to_path_buf(),
                line: lineno,
                message: "empty id".into(),
            });
        }
        if !seen.insert(raw.id.clone()) {
            return Err(Error::DuplicateId {
                id: raw.id,
                line: lineno,
            });
        }
        documents.push(Document {
            id: raw.id,
            title: raw.title,
            body: raw.content,
            labels: raw.labels,
        });
    }
    if documents.is_empty() {
        return Err(Error::EmptyDataset(path.to_path_buf()));
    }
    Dataset::from_documents(documents, schema)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Split {
    pub seed: u64,
    pub test_fraction: f64,
    pub train: Vec<String>,
    pub test: Vec<String>,
}

impl Split {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

/// Partitions `items` (already filtered) by a seeded Fisher–Yates shuffle:
/// the first `round(fraction * n)` shuffled items form the held-out part.
/// Returns `(kept, held_out)`, both in shuffled order.
pub fn seeded_partition<T: Clone>(items: &[T], fraction: f64, seed: u64) -> Result<(Vec<T>, Vec<T>)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::invalid(format!(
            "test fraction {fraction} is outside (0, 1)"
        )));
    }
    let n = items.len();
    let n_held = (fraction * n as f64).round() as usize;
    if n_held < 1 {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n} documents leaves no held-out documents"
        )));
    }
    if n_held >= n {
        return Err(Error::invalid(format!(
            "fraction {fraction} of {n} documents leaves no training documents"
        )));
    }
    let mut shuffled = items.to_vec();
    Rng::new(seed).shuffle(&mut shuffled);
    let kept = shuffled.split_off(n_held);
    Ok((kept, shuffled))
}

/// Seeded random (unstratified) train/test split over the documents that
/// carry a label for `field`.
pub fn make_split(dataset: &Dataset, field: &str, test_fraction: f64, seed: u64) -> Result<Split> {
    let labeled = dataset.labeled(field)?;
    if labeled.len() < 2 {
        return Err(Error::invalid(format!(
            "field {field:?} needs at least 2 labeled documents, found {}",
            labeled.len()
        )));
    }
    let ids: Vec<String> = labeled.iter().map(|(d, _)| d.id.clone()).collect();
    let (train, test) = seeded_partition(&ids, test_fraction, seed)?;
    if log::log_enabled!(log::Level::Debug) {
        let classes = dataset.class_set(field)?;
        let histogram = |ids: &[String]| {
            let mut counts = vec![0usize; classes.len()];
            for id in ids {
                let label = dataset.get(id).and_then(|d| d.label(field)).unwrap_or_default();
                if let Some(c) = classes.id(label) {
                    counts[c] += 1;
                }
            }
            counts
        };
        log::debug!(
            "split {field} seed={seed}: train classes {:?}, test classes {:?}",
            histogram(&train),
            histogram(&test)
        );
    }
    Ok(Split {
        seed,
        test_fraction,
        train,
        test,
    })
}
