//! Constructed corpora with a known answer, used for smoke benchmarks and
//! embedding sanity checks.

use std::collections::BTreeMap;

use crate::corpus::{Dataset, Document};
use crate::preprocess::{EncodedDocument, Vocabulary};
use crate::rng::Rng;
use crate::Result;

pub const KEYWORD_FIELD: &str = "category";

/// Class name and its keywords.
pub const KEYWORD_CLASSES: [(&str, [&str; 6]); 3] = [
    ("graphics", ["button", "color", "font", "layout", "theme", "icon"]),
    ("kernel", ["kernel", "driver", "panic", "module", "irq", "firmware"]),
    ("packaging", ["package", "mirror", "install", "signature", "dependency", "pacman"]),
];

const FILLER: [&str; 16] = [
    "issue", "problem", "version", "since", "today", "machine", "users", "report", "seems", "happens", "again", "still", "broken", "latest", "build",
    "release",
];

fn pick<'a>(words: &[&'a str], rng: &mut Rng) -> &'a str {
    words[rng.below(words.len())]
}

/// `n` documents, classes assigned round-robin. Every sentence mixes two
/// keywords of the document's class with shared filler words, so the
/// classes are separable by vocabulary alone.
pub fn keyword_documents(n: usize, seed: u64) -> Vec<Document> {
    let mut rng = Rng::new(seed);
    (0..n)
        .map(|i| {
            let (class, keywords) = KEYWORD_CLASSES[i % KEYWORD_CLASSES.len()];
            let title = format!("{} {} {}", pick(&keywords, &mut rng), pick(&FILLER, &mut rng), pick(&FILLER, &mut rng));
            let sentences = 1 + rng.below(2);
            let body: Vec<String> = (0..sentences)
                .map(|_| {
                    let mut words = vec![pick(&keywords, &mut rng), pick(&keywords, &mut rng)];
                    words.extend((0..3).map(|_| pick(&FILLER, &mut rng)));
                    rng.shuffle(&mut words);
                    words.join(" ")
                })
                .collect();
            Document {
                id: format!("syn-{i:04}"),
                title,
                body: body.join(". ") + ".",
                labels: BTreeMap::from([(KEYWORD_FIELD.to_string(), class.to_string())]),
            }
        })
        .collect()
}

/// The 3-class keyword corpus as a dataset with the single field
/// [`KEYWORD_FIELD`].
pub fn keyword_dataset(n: usize, seed: u64) -> Result<Dataset> {
    Dataset::from_documents(keyword_documents(n, seed), &[KEYWORD_FIELD.to_string()])
}

pub const TOPIC_WORDS: [[&str; 6]; 2] = [
    ["kernel", "driver", "panic", "module", "irq", "memory"],
    ["button", "color", "font", "layout", "theme", "icon"],
];

/// Encoded documents that each draw all their words from one of two
/// disjoint topics; returns the documents, the vocabulary and the token ids
/// of each topic.
pub fn two_topic_corpus(n: usize, seed: u64) -> (Vec<EncodedDocument>, Vocabulary, [Vec<usize>; 2]) {
    let vocab = Vocabulary::from_tokens(TOPIC_WORDS.iter().flatten().copied());
    let ids = TOPIC_WORDS.map(|words| words.iter().map(|w| vocab.id(w).expect("in vocabulary")).collect::<Vec<_>>());
    let mut rng = Rng::new(seed);
    let docs = (0..n)
        .map(|i| {
            let topic = &ids[i % 2];
            (0..2).map(|_| (0..8).map(|_| topic[rng.below(topic.len())]).collect()).collect()
        })
        .collect();
    (docs, vocab, ids)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn keyword_corpus_shape() {
        let ds = keyword_dataset(600, 1).unwrap();
        assert_eq!(ds.documents.len(), 600);
        let classes = ds.class_set(KEYWORD_FIELD).unwrap();
        assert_eq!(classes.names(), ["graphics", "kernel", "packaging"]);
        assert_eq!(keyword_documents(30, 4), keyword_documents(30, 4));
    }

    #[test]
    fn topics_are_disjoint() {
        let (docs, vocab, [a, b]) = two_topic_corpus(10, 2);
        assert_eq!(vocab.len(), 14);
        assert!(a.iter().all(|x| !b.contains(x)));
        for (i, d) in docs.iter().enumerate() {
            let topic = if i % 2 == 0 { &a } else { &b };
            assert!(d.iter().flatten().all(|t| topic.contains(t)));
        }
    }
}
