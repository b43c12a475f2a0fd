//! Text cleaning, sentence segmentation, tokenization and vocabularies.
//!
//! [`preprocess_document`] applies, in order:
//!
//! 1. title and body are kept apart; the title is always sentence 1,
//! 2. garbage rules delete their matches (replaced by a space),
//! 3. lowercasing,
//! 4. sentence split of the body on `.`, `!`, `?` followed by whitespace or
//!    end of text, and on every newline,
//! 5. tokenization into maximal runs of Unicode letters and digits,
//! 6. stopword removal,
//! 7. truncation to `max_sentences` x `max_tokens_per_sentence`.
//!
//! A document left without tokens becomes a single sentence holding the
//! [`OOV_TOKEN`] placeholder.

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::Path;

use regex::Regex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::corpus::Document;
use crate::{Error, Result};

pub const PAD_TOKEN: &str = "<pad>";
pub const OOV_TOKEN: &str = "<oov>";
pub const PAD: usize = 0;
pub const OOV: usize = 1;

const BUNDLED_STOPWORDS: &str = include_str!("../data/stopwords_en.txt");

/// Parses a stopword list: one token per line, `#` starts a comment line.
pub fn parse_stopwords(text: &str) -> BTreeSet<String> {
    text.lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .map(str::to_lowercase)
        .collect()
}

pub fn bundled_stopwords() -> BTreeSet<String> {
    parse_stopwords(BUNDLED_STOPWORDS)
}

pub fn load_stopwords(path: impl AsRef<Path>) -> Result<BTreeSet<String>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(parse_stopwords(&text))
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq, Eq)]
pub struct GarbageRuleSpec {
    pub name: String,
    pub pattern: String,
}

#[derive(Debug, Clone)]
pub struct GarbageRule {
    pub name: String,
    regex: Regex,
}

impl GarbageRule {
    pub fn new(name: impl Into<String>, pattern: &str) -> Result<Self> {
        let name = name.into();
        let regex = Regex::new(pattern).map_err(|source| Error::Regex {
            name: name.clone(),
            source,
        })?;
        Ok(GarbageRule { name, regex })
    }

    pub fn pattern(&self) -> &str {
        self.regex.as_str()
    }

    fn apply(&self, text: &str) -> String {
        self.regex.replace_all(text, " ").into_owned()
    }
}

/// Stand-in rules for stack traces, hex addresses, markup and long numbers.
pub fn default_garbage_rules() -> Vec<GarbageRuleSpec> {
    [
        ("hex_address", r"(?i)0x[0-9a-f]{4,}"),
        (
            "stack_frame",
            r"(?m)^[ \t]*(?:#\d+\b|at\s+[\w$<>]+(?:[./:]+[\w$<>]+)+).*$",
        ),
        ("html_tag", r"<[^>]+>"),
        ("long_digits", r"\d{8,}"),
    ]
    .into_iter()
    .map(|(name, pattern)| GarbageRuleSpec {
        name: name.into(),
        pattern: pattern.into(),
    })
    .collect()
}

pub fn compile_rules(specs: &[GarbageRuleSpec]) -> Result<Vec<GarbageRule>> {
    specs
        .iter()
        .map(|s| GarbageRule::new(s.name.clone(), &s.pattern))
        .collect()
}

/// Reads `[{"name": ..., "pattern": ...}]`.
pub fn load_garbage_rules(path: impl AsRef<Path>) -> Result<Vec<GarbageRuleSpec>> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}

#[derive(Debug, Clone)]
pub struct PipelineConfig {
    pub stopwords: BTreeSet<String>,
    pub garbage_rules: Vec<GarbageRule>,
    pub max_sentences: usize,
    pub max_tokens_per_sentence: usize,
}

impl PipelineConfig {
    pub fn new(
        stopwords: BTreeSet<String>,
        garbage_rules: Vec<GarbageRule>,
        max_sentences: usize,
        max_tokens_per_sentence: usize,
    ) -> Result<Self> {
        if max_sentences == 0 || max_tokens_per_sentence == 0 {
            return Err(Error::invalid("sentence and token caps must be at least 1"));
        }
        Ok(PipelineConfig {
            stopwords,
            garbage_rules,
            max_sentences,
            max_tokens_per_sentence,
        })
    }

    /// No rules, no stopwords, default caps.
    pub fn bare() -> Self {
        PipelineConfig {
            stopwords: BTreeSet::new(),
            garbage_rules: Vec::new(),
            max_sentences: 30,
            max_tokens_per_sentence: 60,
        }
    }
}

impl Default for PipelineConfig {
    /// Bundled stopwords, default garbage rules, 30 sentences x 60 tokens.
    fn default() -> Self {
        PipelineConfig {
            stopwords: bundled_stopwords(),
            garbage_rules: compile_rules(&default_garbage_rules()).expect("default rules compile"),
            ..PipelineConfig::bare()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDocument {
    pub doc_id: String,
    pub sentences: Vec<Vec<String>>,
}

impl ProcessedDocument {
    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.sentences.iter().flatten().map(String::as_str)
    }

    pub fn token_count(&self) -> usize {
        self.sentences.iter().map(Vec::len).sum()
    }
}

/// Splits on `.`, `!`, `?` followed by whitespace or end of text, and on
/// newlines. Empty pieces are dropped.
pub fn split_sentences(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut chars = text.char_indices().peekable();
    while let Some((i, c)) = chars.next() {
        let boundary = match c {
            '\n' => true,
            '.' | '!' | '?' => chars.peek().is_none_or(|(_, next)| next.is_whitespace()),
            _ => false,
        };
        if boundary {
            let end = i + c.len_utf8();
            out.push(&text[start..end]);
            start = end;
        }
    }
    out.push(&text[start..]);
    out.retain(|s| !s.trim().is_empty());
    out
}

/// Maximal runs of letters and digits, lowercased.
pub fn tokenize(text: &str) -> Vec<String> {
    let mut out = Vec::new();
    for run in text.split(|c: char| !c.is_alphanumeric()) {
        if run.is_empty() {
            continue;
        }
        let lower = run.to_lowercase();
        if lower == run {
            out.push(lower);
        } else {
            // Some lowercase mappings emit combining marks; split again.
            out.extend(
                lower
                    .split(|c: char| !c.is_alphanumeric())
                    .filter(|t| !t.is_empty())
                    .map(str::to_string),
            );
        }
    }
    out
}

pub fn preprocess_document(doc: &Document, config: &PipelineConfig) -> ProcessedDocument {
    let clean = |text: &str| {
        let mut text = text.to_string();
        for rule in &config.garbage_rules {
            text = rule.apply(&text);
        }
        text.to_lowercase()
    };
    let title = clean(&doc.title);
    let body = clean(&doc.body);

    let mut raw_sentences: Vec<&str> = Vec::new();
    if !title.trim().is_empty() {
        raw_sentences.push(&title);
    }
    raw_sentences.extend(split_sentences(&body));

    let mut sentences = Vec::new();
    for raw in raw_sentences {
        if sentences.len() == config.max_sentences {
            break;
        }
        let mut tokens: Vec<String> = tokenize(raw)
            .into_iter()
            .filter(|t| !config.stopwords.contains(t))
            .collect();
        if tokens.is_empty() {
            continue;
        }
        tokens.truncate(config.max_tokens_per_sentence);
        sentences.push(tokens);
    }
    if sentences.is_empty() {
        sentences.push(vec![OOV_TOKEN.to_string()]);
    }
    ProcessedDocument {
        doc_id: doc.id.clone(),
        sentences,
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(from = "VocabularyRepr", into = "VocabularyRepr")]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, usize>,
    frequencies: BTreeMap<String, usize>,
    min_frequency: usize,
}

#[derive(Serialize, Deserialize)]
struct VocabularyRepr {
    tokens: Vec<String>,
    frequencies: BTreeMap<String, usize>,
    min_frequency: usize,
}

impl From<VocabularyRepr> for Vocabulary {
    fn from(r: VocabularyRepr) -> Self {
        let index = r
            .tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i))
            .collect();
        Vocabulary {
            tokens: r.tokens,
            index,
            frequencies: r.frequencies,
            min_frequency: r.min_frequency,
        }
    }
}

impl From<Vocabulary> for VocabularyRepr {
    fn from(v: Vocabulary) -> Self {
        VocabularyRepr {
            tokens: v.tokens,
            frequencies: v.frequencies,
            min_frequency: v.min_frequency,
        }
    }
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.tokens == other.tokens
            && self.frequencies == other.frequencies
            && self.min_frequency == other.min_frequency
    }
}

impl Vocabulary {
    /// Keeps the `max_size` most frequent tokens with frequency at least
    /// `min_frequency`, ranked by (frequency desc, token asc), after the
    /// reserved PAD and OOV entries.
    pub fn build(docs: &[ProcessedDocument], min_frequency: usize, max_size: usize) -> Result<Self> {
        if max_size < 1 {
            return Err(Error::invalid("vocabulary max_size must be at least 1"));
        }
        if docs.is_empty() {
            return Err(Error::invalid("cannot build a vocabulary from zero documents"));
        }
        let mut counts: HashMap<&str, usize> = HashMap::new();
        for tok in docs.iter().flat_map(ProcessedDocument::tokens) {
            if tok != PAD_TOKEN && tok != OOV_TOKEN {
                *counts.entry(tok).or_default() += 1;
            }
        }
        let mut ranked: Vec<(&str, usize)> = counts
            .into_iter()
            .filter(|&(_, c)| c >= min_frequency)
            .collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then_with(|| a.0.cmp(b.0)));
        ranked.truncate(max_size);

        let mut tokens = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        tokens.extend(ranked.iter().map(|(t, _)| t.to_string()));
        let frequencies = ranked.iter().map(|&(t, c)| (t.to_string(), c)).collect();
        Ok(VocabularyRepr {
            tokens,
            frequencies,
            min_frequency,
        }
        .into())
    }

    /// Vocabulary with the given non-reserved tokens in order, all with
    /// frequency 1.
    pub fn from_tokens<I, S>(tokens: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        let mut all = vec![PAD_TOKEN.to_string(), OOV_TOKEN.to_string()];
        all.extend(tokens.into_iter().map(Into::into));
        let frequencies = all[2..].iter().map(|t| (t.clone(), 1)).collect();
        VocabularyRepr {
            tokens: all,
            frequencies,
            min_frequency: 1,
        }
        .into()
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn id(&self, token: &str) -> Option<usize> {
        self.index.get(token).copied()
    }

    pub fn id_or_oov(&self, token: &str) -> usize {
        self.id(token).unwrap_or(OOV)
    }

    pub fn token(&self, id: usize) -> Option<&str> {
        self.tokens.get(id).map(String::as_str)
    }

    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn frequency(&self, token: &str) -> usize {
        self.frequencies.get(token).copied().unwrap_or(0)
    }

    pub fn min_frequency(&self) -> usize {
        self.min_frequency
    }

    /// SHA-256 over the id-ordered token list; identifies the id mapping.
    pub fn fingerprint(&self) -> String {
        token_list_fingerprint(&self.tokens)
    }
}

pub(crate) fn token_list_fingerprint(tokens: &[String]) -> String {
    let mut hasher = Sha256::new();
    for t in tokens {
        hasher.update(t.as_bytes());
        hasher.update(b"\n");
    }
    hasher.finalize().iter().map(|b| format!("{b:02x}")).collect()
}

pub type EncodedDocument = Vec<Vec<usize>>;

pub fn encode(doc: &ProcessedDocument, vocab: &Vocabulary) -> EncodedDocument {
    doc.sentences
        .iter()
        .map(|s| s.iter().map(|t| vocab.id_or_oov(t)).collect())
        .collect()
}

pub fn decode(ids: &EncodedDocument, vocab: &Vocabulary) -> Vec<Vec<String>> {
    ids.iter()
        .map(|s| {
            s.iter()
                .map(|&i| vocab.token(i).unwrap_or(OOV_TOKEN).to_string())
                .collect()
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn document(title: &str, body: &str) -> Document {
        Document {
            id: "d".into(),
            title: title.into(),
            body: body.into(),
            labels: Default::default(),
        }
    }

    fn strings(v: &[&[&str]]) -> Vec<Vec<String>> {
        v.iter()
            .map(|s| s.iter().map(|t| t.to_string()).collect())
            .collect()
    }

    #[test]
    fn title_is_first_sentence() {
        let mut cfg = PipelineConfig::bare();
        cfg.stopwords.insert("the".into());
        let out = preprocess_document(&document("Kernel PANIC", "The driver crashes."), &cfg);
        assert_eq!(out.sentences, strings(&[&["kernel", "panic"], &["driver", "crashes"]]));
    }

    #[test]
    fn hex_rule_runs_before_tokenization() {
        let mut cfg = PipelineConfig::bare();
        cfg.garbage_rules = vec![GarbageRule::new("hex", r"(?i)0x[0-9a-f]{4,}").unwrap()];
        let out = preprocess_document(&document("", "0xdeadbeef at frame #7"), &cfg);
        assert_eq!(out.sentences, strings(&[&["at", "frame", "7"]]));
        let uncleaned = preprocess_document(&document("", "0xDEADBEEF at frame #7"), &PipelineConfig::bare());
        assert_eq!(uncleaned.sentences[0][0], "0xdeadbeef");
    }

    #[test]
    fn empty_document_is_oov_placeholder() {
        let out = preprocess_document(&document("", ""), &PipelineConfig::default());
        assert_eq!(out.sentences, strings(&[&[OOV_TOKEN]]));
        let only_stop = preprocess_document(&document("the", "a an."), &PipelineConfig::default());
        assert_eq!(only_stop.sentences, strings(&[&[OOV_TOKEN]]));
    }

    #[test]
    fn default_rules() {
        let cfg = PipelineConfig::default();
        let body = "Segfault when opening <b>menu</b>.\n\
                    #0 0x00007f3a in g_main_loop\n\
                    at org.mozilla.Foo.bar(Foo.java:42)\n\
                    at home it works fine. ticket 1234567890 closed";
        let out = preprocess_document(&document("Crash", body), &cfg);
        assert_eq!(
            out.sentences,
            strings(&[
                &["crash"],
                &["segfault", "opening", "menu"],
                &["home", "works", "fine"],
                &["ticket", "closed"],
            ])
        );
    }

    #[test]
    fn sentence_boundaries() {
        assert_eq!(split_sentences("a.b. c! d?e\nf"), vec!["a.b.", " c!", " d?e\n", "f"]);
        assert_eq!(split_sentences("end."), vec!["end."]);
        assert!(split_sentences("  \n ").is_empty());
    }

    #[test]
    fn tokenizer_splits_underscores() {
        assert_eq!(tokenize("i2o_scsi does-not"), vec!["i2o", "scsi", "does", "not"]);
        assert_eq!(tokenize("Übel  Straße"), vec!["übel", "straße"]);
    }

    #[test]
    fn caps_enforced() {
        let cfg = PipelineConfig::new(BTreeSet::new(), vec![], 2, 3).unwrap();
        let out = preprocess_document(&document("a b c d e", "f g. h i j k. l m."), &cfg);
        assert_eq!(out.sentences, strings(&[&["a", "b", "c"], &["f", "g"]]));
        assert!(PipelineConfig::new(BTreeSet::new(), vec![], 0, 3).is_err());
    }

    #[test]
    fn bundled_stopword_list_is_pinned() {
        let words = bundled_stopwords();
        assert_eq!(words.len(), 153);
        assert!(words.contains("the") && words.contains("not") && !words.contains("kernel"));
        let joined: Vec<String> = words.into_iter().collect();
        assert_eq!(
            token_list_fingerprint(&joined)[..16],
            *"ca1904afa9752b85"
        );
    }

    #[test]
    fn garbage_rules_json() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("rules.json");
        std::fs::write(&path, r#"[{"name": "ids", "pattern": "id-\\d+"}]"#).unwrap();
        let specs = load_garbage_rules(&path).unwrap();
        assert_eq!(specs[0].name, "ids");
        let rules = compile_rules(&specs).unwrap();
        let cfg = PipelineConfig::new(BTreeSet::new(), rules, 5, 5).unwrap();
        let out = preprocess_document(&document("see id-42 now", ""), &cfg);
        assert_eq!(out.sentences, strings(&[&["see", "now"]]));
        let bad = [GarbageRuleSpec { name: "bad".into(), pattern: "(".into() }];
        assert!(matches!(compile_rules(&bad), Err(Error::Regex { .. })));
    }

    fn processed(sentences: &[&[&str]]) -> ProcessedDocument {
        ProcessedDocument {
            doc_id: "x".into(),
            sentences: strings(sentences),
        }
    }

    #[test]
    fn vocabulary_threshold_and_ties() {
        let docs = vec![
            processed(&[&["kernel", "kernel", "kernel", "gui"]]),
            processed(&[&["kernel", "kernel", "bbb", "aaa"], &["bbb", "aaa"]]),
        ];
        let v = Vocabulary::build(&docs, 2, 100).unwrap();
        assert_eq!(v.tokens(), [PAD_TOKEN, OOV_TOKEN, "kernel", "aaa", "bbb"]);
        assert_eq!(v.id("gui"), None);
        assert_eq!(v.frequency("kernel"), 5);
        assert!(Vocabulary::build(&docs, 1, 0).is_err());
        assert!(Vocabulary::build(&[], 1, 10).is_err());
    }

    #[test]
    fn vocabulary_truncation_matches_sort_oracle() {
        // token i (0..10) appears (i * 7) % 10 + 1 times
        let mut toks = Vec::new();
        for i in 0..10 {
            for _ in 0..(i * 7) % 10 + 1 {
                toks.push(format!("t{i}"));
            }
        }
        let doc = ProcessedDocument { doc_id: "x".into(), sentences: vec![toks] };
        let v = Vocabulary::build(&[doc], 1, 3).unwrap();
        let mut oracle: Vec<(usize, String)> = (0..10).map(|i| ((i * 7) % 10 + 1, format!("t{i}"))).collect();
        oracle.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
        let expected: Vec<&str> = [PAD_TOKEN, OOV_TOKEN]
            .into_iter()
            .chain(oracle[..3].iter().map(|(_, t)| t.as_str()))
            .collect();
        assert_eq!(v.tokens(), expected.as_slice());
    }

    #[test]
    fn encode_decode() {
        let v = Vocabulary::from_tokens(["kernel", "panic"]);
        let d = processed(&[&["kernel", "panic"], &["unknown"]]);
        let ids = encode(&d, &v);
        assert_eq!(ids, vec![vec![2, 3], vec![OOV]]);
        assert_eq!(decode(&ids, &v), strings(&[&["kernel", "panic"], &[OOV_TOKEN]]));
        let known = processed(&[&["panic", "kernel"]]);
        assert_eq!(decode(&encode(&known, &v), &v), known.sentences);
    }

    #[test]
    fn vocabulary_serde_and_fingerprint() {
        let v = Vocabulary::from_tokens(["a", "b"]);
        let back: Vocabulary = serde_json::from_str(&serde_json::to_string(&v).unwrap()).unwrap();
        assert_eq!(back, v);
        assert_eq!(back.id("b"), Some(3));
        assert_eq!(back.fingerprint(), v.fingerprint());
        assert_ne!(Vocabulary::from_tokens(["b", "a"]).fingerprint(), v.fingerprint());
    }

    fn text_strategy() -> impl Strategy<Value = String> {
        proptest::collection::vec(
            prop_oneof![
                "[a-zA-Z0-9]{1,8}",
                Just("The".to_string()),
                Just("and".to_string()),
                Just(". ".to_string()),
                Just("!\n".to_string()),
                Just("0xBEEF12".to_string()),
                Just("<br/>".to_string()),
                Just("_".to_string()),
                Just("Ärger".to_string()),
            ],
            0..40,
        )
        .prop_map(|parts| parts.join(" "))
    }

    proptest! {
        #[test]
        fn output_invariants(title in text_strategy(), body in text_strategy()) {
            let cfg = PipelineConfig::new(bundled_stopwords(), compile_rules(&default_garbage_rules()).unwrap(), 4, 5).unwrap();
            let out = preprocess_document(&document(&title, &body), &cfg);
            prop_assert!(!out.sentences.is_empty() && out.sentences.len() <= 4);
            for s in &out.sentences {
                prop_assert!(!s.is_empty() && s.len() <= 5);
                for t in s {
                    prop_assert!(!t.is_empty());
                    prop_assert!(!t.chars().any(char::is_whitespace));
                    prop_assert_eq!(t, &t.to_lowercase());
                    prop_assert!(!cfg.stopwords.contains(t));
                }
            }
        }

        #[test]
        fn order_preserved_and_idempotent(title in text_strategy(), body in text_strategy()) {
            let cfg = PipelineConfig::new(bundled_stopwords(), compile_rules(&default_garbage_rules()).unwrap(), 100, 100).unwrap();
            let out = preprocess_document(&document(&title, &body), &cfg);
            if out.sentences != vec![vec![OOV_TOKEN.to_string()]] {
                // surviving tokens are a subsequence of the raw token stream
                let raw: Vec<String> = tokenize(&title).into_iter().chain(tokenize(&body)).collect();
                let mut it = raw.iter();
                for t in out.tokens() {
                    prop_assert!(it.any(|r| r == t));
                }
                let flat: Vec<String> = out.sentences.iter().map(|s| s.join(" ")).collect();
                let again = preprocess_document(&document("", &flat.join("\n")), &cfg);
                let mut a: Vec<&str> = out.tokens().collect();
                let mut b: Vec<&str> = again.tokens().collect();
                a.sort_unstable();
                b.sort_unstable();
                prop_assert_eq!(a, b);
            }
        }
    }
}
