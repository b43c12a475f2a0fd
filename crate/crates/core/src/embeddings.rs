//! Skip-gram word embeddings trained with negative sampling.
//!
//! For every (center, context) pair inside the window the trainer maximizes
//! `log σ(v_c·u_o) + Σ_k log σ(-v_c·u_k)` by SGD, with negatives `u_k` drawn
//! from the unigram distribution raised to 0.75. The learning rate decays
//! linearly to `1e-4` of its initial value. Only the center (input) vectors
//! are kept. PAD and OOV are never centers, contexts or negatives, and the
//! PAD row is zero.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::nncore::Tensor;
use crate::preprocess::{token_list_fingerprint, EncodedDocument, Vocabulary, OOV, PAD};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    matrix: Tensor,
    vocab_hash: String,
}

impl EmbeddingTable {
    /// Wraps a `V×d` matrix; the PAD row is forced to zero.
    pub fn new(mut matrix: Tensor, vocab_hash: impl Into<String>) -> Result<Self> {
        matrix.expect_rank2("EmbeddingTable::new")?;
        if !matrix.all_finite() {
            return Err(Error::NonFinite("embedding matrix".into()));
        }
        if matrix.rows() > PAD {
            matrix.row_mut(PAD).fill(0.0);
        }
        Ok(EmbeddingTable {
            matrix,
            vocab_hash: vocab_hash.into(),
        })
    }

    /// Small uniform random table (`±0.5/d`) for the given vocabulary.
    pub fn random(vocab: &Vocabulary, dim: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let matrix = Tensor::uniform(&[vocab.len(), dim], 0.5 / dim as f64, &mut rng);
        EmbeddingTable::new(matrix, vocab.fingerprint()).expect("finite")
    }

    pub fn vocab_size(&self) -> usize {
        self.matrix.rows()
    }

    pub fn dim(&self) -> usize {
        self.matrix.cols()
    }

    pub fn matrix(&self) -> &Tensor {
        &self.matrix
    }

    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    pub fn row(&self, id: usize) -> &[f64] {
        self.matrix.row(id)
    }

    /// SHA-256 of the matrix values (little-endian bytes) and shape.
    pub fn fingerprint(&self) -> String {
        let mut h = Sha256::new();
        for &d in self.matrix.shape() {
            h.update((d as u64).to_le_bytes());
        }
        for &v in self.matrix.data() {
            h.update(v.to_le_bytes());
        }
        h.finalize().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn lookup(&self, ids: &[usize]) -> Result<Tensor> {
        lookup(self, ids)
    }
}

/// Gathers rows `ids` into a `T×d` tensor.
pub fn lookup(table: &EmbeddingTable, ids: &[usize]) -> Result<Tensor> {
    let d = table.dim();
    let mut out = Tensor::zeros(&[ids.len(), d]);
    for (t, &id) in ids.iter().enumerate() {
        if id >= table.vocab_size() {
            return Err(Error::invalid(format!(
                "token id {id} out of range for {} embeddings",
                table.vocab_size()
            )));
        }
        out.row_mut(t).copy_from_slice(table.row(id));
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SkipGramConfig {
    pub dim: usize,
    pub window: usize,
    pub negatives: usize,
    pub epochs: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for SkipGramConfig {
    fn default() -> Self {
        SkipGramConfig {
            dim: 100,
            window: 5,
            negatives: 5,
            epochs: 5,
            learning_rate: 0.025,
            seed: 1,
        }
    }
}

impl SkipGramConfig {
    pub fn validate(&self) -> Result<()> {
        if self.dim == 0 || self.window == 0 || self.negatives == 0 || self.epochs == 0 {
            return Err(Error::invalid("skip-gram dim, window, negatives and epochs must be positive"));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::invalid("skip-gram learning rate must be positive"));
        }
        Ok(())
    }
}

/// Draws token ids with probability proportional to `count^0.75`.
#[derive(Debug, Clone)]
pub struct NegativeSampler {
    ids: Vec<usize>,
    cumulative: Vec<f64>,
}

impl NegativeSampler {
    pub fn new(counts: &[(usize, f64)]) -> Result<Self> {
        let mut ids = Vec::new();
        let mut cumulative = Vec::new();
        let mut acc = 0.0;
        for &(id, c) in counts {
            if c > 0.0 {
                acc += c.powf(0.75);
                ids.push(id);
                cumulative.push(acc);
            }
        }
        if ids.is_empty() {
            return Err(Error::invalid("negative sampler needs at least one positive count"));
        }
        Ok(NegativeSampler { ids, cumulative })
    }

    pub fn probability(&self, id: usize) -> f64 {
        let total = *self.cumulative.last().expect("non-empty");
        match self.ids.iter().position(|&i| i == id) {
            Some(0) => self.cumulative[0] / total,
            Some(p) => (self.cumulative[p] - self.cumulative[p - 1]) / total,
            None => 0.0,
        }
    }

    pub fn sample(&self, rng: &mut Rng) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.next_f64() * total;
        let pos = self.cumulative.partition_point(|&c| c <= u);
        self.ids[pos.min(self.ids.len() - 1)]
    }
}

fn trainable(id: usize) -> bool {
    id != PAD && id != OOV
}

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

#[derive(Debug, Clone)]
pub struct SkipGramOutcome {
    pub table: EmbeddingTable,
    /// Mean negative-sampling loss per (center, context) pair, per epoch.
    pub epoch_losses: Vec<f64>,
}

pub fn train_skipgram(docs: &[EncodedDocument], vocab: &Vocabulary, config: &SkipGramConfig) -> Result<EmbeddingTable> {
    train_skipgram_with_history(docs, vocab, config).map(|o| o.table)
}

pub fn train_skipgram_with_history(
    docs: &[EncodedDocument],
    vocab: &Vocabulary,
    config: &SkipGramConfig,
) -> Result<SkipGramOutcome> {
    config.validate()?;
    if docs.is_empty() {
        return Err(Error::invalid("skip-gram needs a non-empty corpus"));
    }
    let v = vocab.len();
    if v < config.negatives + 2 {
        return Err(Error::invalid(format!(
            "vocabulary of {v} entries is smaller than negatives + 2 = {}",
            config.negatives + 2
        )));
    }
    let streams: Vec<Vec<usize>> = docs
        .iter()
        .map(|d| d.iter().flatten().copied().filter(|&t| t != PAD).collect())
        .collect();
    let mut counts = vec![0.0; v];
    for &t in streams.iter().flatten() {
        if t >= v {
            return Err(Error::invalid(format!("token id {t} out of range for vocabulary of {v}")));
        }
        counts[t] += 1.0;
    }
    let sampler = NegativeSampler::new(
        &counts
            .iter()
            .enumerate()
            .filter(|&(id, _)| trainable(id))
            .map(|(id, &c)| (id, c))
            .collect::<Vec<_>>(),
    )?;

    let d = config.dim;
    let mut rng = Rng::new(config.seed);
    let mut input = Tensor::uniform(&[v, d], 0.5 / d as f64, &mut rng);
    input.row_mut(PAD).fill(0.0);
    let mut output = Tensor::zeros(&[v, d]);

    let centers_per_epoch = streams.iter().flatten().filter(|&&t| trainable(t)).count();
    let total = (centers_per_epoch * config.epochs).max(1) as f64;
    let mut processed = 0usize;
    let mut order: Vec<usize> = (0..streams.len()).collect();
    let mut epoch_losses = Vec::with_capacity(config.epochs);
    let mut grad_center = vec![0.0; d];

    for _ in 0..config.epochs {
        rng.shuffle(&mut order);
        let mut loss_sum = 0.0;
        let mut pairs = 0usize;
        for &di in &order {
            let stream = &streams[di];
            for (i, &center) in stream.iter().enumerate() {
                if !trainable(center) {
                    continue;
                }
                let lr = config.learning_rate * (1.0 - processed as f64 / total).max(1e-4);
                processed += 1;
                let lo = i.saturating_sub(config.window);
                let hi = (i + config.window).min(stream.len() - 1);
                for (j, &context) in stream.iter().enumerate().take(hi + 1).skip(lo) {
                    if j == i || !trainable(context) {
                        continue;
                    }
                    grad_center.iter_mut().for_each(|g| *g = 0.0);
                    let vc = input.row(center).to_vec();

                    let s = sigmoid(dot(&vc, output.row(context)));
                    loss_sum -= s.max(1e-12).ln();
                    let g = (1.0 - s) * lr;
                    for (gc, &u) in grad_center.iter_mut().zip(output.row(context)) {
                        *gc += g * u;
                    }
                    for (u, &x) in output.row_mut(context).iter_mut().zip(&vc) {
                        *u += g * x;
                    }
                    for _ in 0..config.negatives {
                        let neg = sampler.sample(&mut rng);
                        if neg == context {
                            continue;
                        }
                        let s = sigmoid(dot(&vc, output.row(neg)));
                        loss_sum -= (1.0 - s).max(1e-12).ln();
                        let g = -s * lr;
                        for (gc, &u) in grad_center.iter_mut().zip(output.row(neg)) {
                            *gc += g * u;
                        }
                        for (u, &x) in output.row_mut(neg).iter_mut().zip(&vc) {
                            *u += g * x;
                        }
                    }
                    for (x, g) in input.row_mut(center).iter_mut().zip(&grad_center) {
                        *x += g;
                    }
                    pairs += 1;
                }
            }
        }
        let mean = if pairs == 0 { 0.0 } else { loss_sum / pairs as f64 };
        if !mean.is_finite() {
            return Err(Error::NonFinite(format!("skip-gram loss at epoch {}", epoch_losses.len() + 1)));
        }
        log::debug!("skip-gram epoch {}: loss {mean:.5} over {pairs} pairs", epoch_losses.len() + 1);
        epoch_losses.push(mean);
    }
    Ok(SkipGramOutcome {
        table: EmbeddingTable::new(input, vocab.fingerprint())?,
        epoch_losses,
    })
}

/// Writes the word2vec text format: `V d`, then `token v1 ... vd` per row.
pub fn save_embeddings(table: &EmbeddingTable, vocab: &Vocabulary, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    if vocab.fingerprint() != table.vocab_hash() || vocab.len() != table.vocab_size() {
        return Err(Error::VocabMismatch {
            expected: table.vocab_hash().to_string(),
            found: vocab.fingerprint(),
        });
    }
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    let io = |e| Error::io(path, e);
    writeln!(w, "{} {}", table.vocab_size(), table.dim()).map_err(io)?;
    for (id, token) in vocab.tokens().iter().enumerate() {
        write!(w, "{token}").map_err(io)?;
        for v in table.row(id) {
            write!(w, " {v}").map_err(io)?;
        }
        writeln!(w).map_err(io)?;
    }
    w.flush().map_err(io)
}

/// Reads the word2vec text format; returns the token list (in row order)
/// and the table.
pub fn load_embeddings(path: impl AsRef<Path>) -> Result<(Vec<String>, EmbeddingTable)> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut lines = BufReader::new(file).lines();
    let header = lines
        .next()
        .ok_or_else(|| parse_err(1, "missing header".into()))?
        .map_err(|e| Error::io(path, e))?;
    let dims: Vec<usize> = header
        .split_whitespace()
        .map(str::parse)
        .collect::<std::result::Result<_, _>>()
        .map_err(|e| parse_err(1, format!("bad header {header:?}: {e}")))?;
    let [v, d] = dims[..] else {
        return Err(parse_err(1, format!("header must be \"V d\", got {header:?}")));
    };
    let mut tokens = Vec::with_capacity(v);
    let mut data = Vec::with_capacity(v * d);
    for (i, line) in lines.enumerate() {
        let lineno = i + 2;
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if tokens.len() == v {
            return Err(parse_err(lineno, format!("more than {v} rows")));
        }
        let mut parts = line.split_whitespace();
        let token = parts.next().expect("non-empty line");
        let row: Vec<f64> = parts
            .map(str::parse)
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| parse_err(lineno, format!("bad component: {e}")))?;
        if row.len() != d {
            return Err(parse_err(lineno, format!("expected {d} components, found {}", row.len())));
        }
        tokens.push(token.to_string());
        data.extend(row);
    }
    if tokens.len() != v {
        return Err(parse_err(tokens.len() + 2, format!("header declares {v} rows, found {}", tokens.len())));
    }
    let hash = token_list_fingerprint(&tokens);
    let table = EmbeddingTable::new(Tensor::from_vec(&[v, d], data)?, hash)?;
    Ok((tokens, table))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lookup_rows() {
        let vocab = Vocabulary::from_tokens(["a", "b", "c"]);
        let table = EmbeddingTable::random(&vocab, 3, 1);
        let pad = lookup(&table, &[PAD]).unwrap();
        assert!(pad.data().iter().all(|&x| x == 0.0));
        let rep = lookup(&table, &[3, 3]).unwrap();
        assert_eq!(rep.row(0), rep.row(1));
        let g = lookup(&table, &[2, 3]).unwrap();
        assert_eq!(g.row(0), table.row(2));
        assert_eq!(g.row(1), table.row(3));
        assert!(lookup(&table, &[5]).is_err());
    }

    #[test]
    fn save_load_round_trip() {
        let vocab = Vocabulary::from_tokens(["kernel", "panic", "gui"]);
        let table = EmbeddingTable::random(&vocab, 4, 9);
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("emb.vec");
        save_embeddings(&table, &vocab, &path).unwrap();
        let (tokens, back) = load_embeddings(&path).unwrap();
        assert_eq!(tokens, vocab.tokens());
        assert!(back.matrix().max_abs_diff(table.matrix()) < 1e-6);
        assert_eq!(back.vocab_hash(), vocab.fingerprint());
    }

    #[test]
    fn hand_written_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("two.vec");
        std::fs::write(&path, "2 2\nfoo 1 2\nbar -0.5 0.25\n").unwrap();
        let (tokens, table) = load_embeddings(&path).unwrap();
        assert_eq!(tokens, ["foo", "bar"]);
        // row 0 is treated as PAD
        assert_eq!(table.matrix().data(), &[0.0, 0.0, -0.5, 0.25]);

        std::fs::write(&path, "3 2\nfoo 1 2\nbar 3 4\n").unwrap();
        assert!(matches!(load_embeddings(&path), Err(Error::Parse { .. })));
        std::fs::write(&path, "2 2\nfoo 1 2\nbar 3\n").unwrap();
        assert!(matches!(load_embeddings(&path), Err(Error::Parse { line: 3, .. })));
        std::fs::write(&path, "2 x\n").unwrap();
        assert!(matches!(load_embeddings(&path), Err(Error::Parse { line: 1, .. })));
    }

    fn topic_corpus() -> (Vec<EncodedDocument>, Vocabulary) {
        let vocab = Vocabulary::from_tokens((0..12).map(|i| format!("w{i}")));
        let mut rng = Rng::new(5);
        let docs = (0..60)
            .map(|n| {
                let base = if n % 2 == 0 { 2 } else { 8 };
                vec![(0..8).map(|_| base + rng.below(6)).collect()]
            })
            .collect();
        (docs, vocab)
    }

    #[test]
    fn loss_drops_and_pad_stays_zero() {
        let (docs, vocab) = topic_corpus();
        let cfg = SkipGramConfig { dim: 8, epochs: 6, ..Default::default() };
        let out = train_skipgram_with_history(&docs, &vocab, &cfg).unwrap();
        assert!(out.epoch_losses.last().unwrap() < &out.epoch_losses[0]);
        assert!(out.table.row(PAD).iter().all(|&x| x == 0.0));
        assert!(out.table.matrix().all_finite());
        let again = train_skipgram(&docs, &vocab, &cfg).unwrap();
        assert_eq!(again, out.table);
    }

    #[test]
    fn rejects_small_vocabulary_and_bad_config() {
        let vocab = Vocabulary::from_tokens(["a", "b"]);
        let docs = vec![vec![vec![2, 3]]];
        let cfg = SkipGramConfig { negatives: 5, ..Default::default() };
        assert!(train_skipgram(&docs, &vocab, &cfg).is_err());
        let cfg = SkipGramConfig { window: 0, negatives: 1, ..Default::default() };
        assert!(train_skipgram(&docs, &vocab, &cfg).is_err());
    }

    #[test]
    fn sampler_probabilities() {
        let s = NegativeSampler::new(&[(2, 1.0), (3, 16.0), (4, 0.0)]).unwrap();
        let p2 = 1.0 / (1.0 + 8.0);
        assert!((s.probability(2) - p2).abs() < 1e-12);
        assert_eq!(s.probability(4), 0.0);
        let mut rng = Rng::new(1);
        for _ in 0..1000 {
            assert_ne!(s.sample(&mut rng), 4);
        }
    }
}
