use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::block::{BlockCache, DeepAttentionBlock};
use super::gru::{concat_cols, encode_sequence, encode_sequence_backward, split_cols, GruCell, SequenceCache, StepMask};
use crate::baselines::argmax;
use crate::embeddings::EmbeddingTable;
use crate::nncore::{cross_entropy, dropout_with_mask, softmax, tanh_backward, Affine, DropoutSpec, Mode, Parameter, Tensor};
use crate::preprocess::{EncodedDocument, OOV, PAD};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Architecture {
    EmbeddingBag,
    Deeptriage,
    Han,
    Proposed,
}

impl Architecture {
    pub const ALL: [Architecture; 4] = [Architecture::EmbeddingBag, Architecture::Deeptriage, Architecture::Han, Architecture::Proposed];

    pub fn tag(self) -> &'static str {
        match self {
            Architecture::EmbeddingBag => "embedding-bag",
            Architecture::Deeptriage => "deeptriage",
            Architecture::Han => "han",
            Architecture::Proposed => "proposed",
        }
    }
}

impl fmt::Display for Architecture {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Architecture {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Architecture::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::invalid(format!("unknown architecture tag {s:?}")))
    }
}

/// Shape and regularization of a neural classifier.
///
/// `block_sizes` gives the GRU size of each deep attention block (`proposed`),
/// of the single hierarchical block (`han`, exactly one entry) or of each
/// direction of the bidirectional GRU (`deeptriage`, first entry).
/// `shallow_size` is the flat-sequence GRU of `proposed` (0 disables it) and
/// `fc_width` the hidden fully-connected layer of `deeptriage`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelSpec {
    pub architecture: Architecture,
    pub block_sizes: Vec<usize>,
    pub shallow_size: usize,
    pub fc_width: usize,
    pub dropout: f64,
    pub num_classes: usize,
    pub attention_projection: bool,
    pub fine_tune_embeddings: bool,
}

impl Default for ModelSpec {
    fn default() -> Self {
        ModelSpec {
            architecture: Architecture::Proposed,
            block_sizes: vec![32, 64, 128],
            shallow_size: 64,
            fc_width: 64,
            dropout: 0.5,
            num_classes: 2,
            attention_projection: false,
            fine_tune_embeddings: false,
        }
    }
}

impl ModelSpec {
    pub fn new(architecture: Architecture, num_classes: usize) -> Self {
        let mut spec = ModelSpec {
            architecture,
            num_classes,
            ..Default::default()
        };
        if architecture == Architecture::Han {
            spec.block_sizes = vec![64];
        }
        spec
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_classes < 2 {
            return Err(Error::invalid(format!("a classifier needs at least 2 classes, got {}", self.num_classes)));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::invalid(format!("dropout {} is outside [0, 1)", self.dropout)));
        }
        if self.block_sizes.contains(&0) {
            return Err(Error::invalid("block sizes must be positive"));
        }
        match self.architecture {
            Architecture::EmbeddingBag => {}
            Architecture::Deeptriage => {
                if self.block_sizes.is_empty() || self.fc_width == 0 {
                    return Err(Error::invalid("deeptriage needs a GRU size and a positive fc_width"));
                }
            }
            Architecture::Han => {
                if self.block_sizes.len() != 1 {
                    return Err(Error::invalid(format!("han takes exactly one block size, got {:?}", self.block_sizes)));
                }
            }
            Architecture::Proposed => {
                if self.block_sizes.is_empty() {
                    return Err(Error::invalid("proposed needs at least one block size"));
                }
            }
        }
        Ok(())
    }

    /// Length of the vector fed to the output layer.
    pub fn feature_dim(&self, embedding_dim: usize) -> usize {
        match self.architecture {
            Architecture::EmbeddingBag => embedding_dim,
            Architecture::Deeptriage => self.fc_width,
            Architecture::Han => self.block_sizes[0],
            Architecture::Proposed => self.block_sizes.iter().sum::<usize>() + self.shallow_size,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
struct HierBlock {
    word: DeepAttentionBlock,
    sentence: DeepAttentionBlock,
}

#[derive(Debug, Clone, PartialEq)]
enum Net {
    Bag {
        fc: Affine,
    },
    DeepTriage {
        forward: GruCell,
        backward: GruCell,
        fc1: Affine,
        fc2: Affine,
    },
    Hier {
        blocks: Vec<HierBlock>,
        shallow: Option<GruCell>,
        fc: Affine,
    },
}

impl Net {
    fn parameters(&self) -> Vec<&Parameter> {
        match self {
            Net::Bag { fc } => fc.parameters(),
            Net::DeepTriage { forward, backward, fc1, fc2 } => {
                let mut out = forward.parameters();
                out.extend(backward.parameters());
                out.extend(fc1.parameters());
                out.extend(fc2.parameters());
                out
            }
            Net::Hier { blocks, shallow, fc } => {
                let mut out = Vec::new();
                for b in blocks {
                    out.extend(b.word.parameters());
                    out.extend(b.sentence.parameters());
                }
                if let Some(s) = shallow {
                    out.extend(s.parameters());
                }
                out.extend(fc.parameters());
                out
            }
        }
    }

    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        match self {
            Net::Bag { fc } => fc.parameters_mut(),
            Net::DeepTriage { forward, backward, fc1, fc2 } => {
                let mut out = forward.parameters_mut();
                out.extend(backward.parameters_mut());
                out.extend(fc1.parameters_mut());
                out.extend(fc2.parameters_mut());
                out
            }
            Net::Hier { blocks, shallow, fc } => {
                let mut out = Vec::new();
                for b in blocks {
                    out.extend(b.word.parameters_mut());
                    out.extend(b.sentence.parameters_mut());
                }
                if let Some(s) = shallow {
                    out.extend(s.parameters_mut());
                }
                out.extend(fc.parameters_mut());
                out
            }
        }
    }
}

/// A neural document classifier over a fixed embedding table.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    spec: ModelSpec,
    embedding: Parameter,
    vocab_hash: String,
    embedding_hash: String,
    net: Net,
}

/// Drops PAD tokens and empty sentences; a document left with nothing
/// becomes the single OOV placeholder `[[OOV]]`.
pub fn normalize_document(doc: &EncodedDocument) -> EncodedDocument {
    let sentences: Vec<Vec<usize>> = doc
        .iter()
        .map(|s| s.iter().copied().filter(|&t| t != PAD).collect::<Vec<_>>())
        .filter(|s| !s.is_empty())
        .collect();
    if sentences.is_empty() {
        vec![vec![OOV]]
    } else {
        sentences
    }
}

/// Padded id grids for a batch of normalized documents.
#[derive(Debug, Clone)]
struct Layout {
    batch: usize,
    sentences: usize,
    /// `[t][b·S + s]`
    word_ids: Vec<Vec<usize>>,
    word_mask: StepMask,
    /// `[s][b]`
    sentence_mask: StepMask,
    /// `[t][b]` over the concatenated sentences
    flat_ids: Vec<Vec<usize>>,
    flat_mask: StepMask,
}

impl Layout {
    fn new(docs: &[EncodedDocument]) -> Self {
        let batch = docs.len();
        let sentences = docs.iter().map(Vec::len).max().unwrap_or(0);
        let tokens = docs.iter().flatten().map(Vec::len).max().unwrap_or(0);
        let flat_len = docs.iter().map(|d| d.iter().map(Vec::len).sum::<usize>()).max().unwrap_or(0);
        let mut word_ids = vec![vec![PAD; batch * sentences]; tokens];
        let mut sentence_mask = vec![vec![false; batch]; sentences];
        let mut flat_ids = vec![vec![PAD; batch]; flat_len];
        for (b, doc) in docs.iter().enumerate() {
            for (s, sent) in doc.iter().enumerate() {
                sentence_mask[s][b] = true;
                for (t, &id) in sent.iter().enumerate() {
                    word_ids[t][b * sentences + s] = id;
                }
            }
            for (t, &id) in doc.iter().flatten().enumerate() {
                flat_ids[t][b] = id;
            }
        }
        let mask_of = |ids: &Vec<Vec<usize>>| ids.iter().map(|row| row.iter().map(|&id| id != PAD).collect()).collect();
        Layout {
            batch,
            sentences,
            word_mask: mask_of(&word_ids),
            flat_mask: mask_of(&flat_ids),
            word_ids,
            sentence_mask,
            flat_ids,
        }
    }
}

#[derive(Debug, Clone)]
enum NetCache {
    Bag,
    DeepTriage {
        seq: SequenceCache,
        final_state: Tensor,
        hidden: Tensor,
        mask: Option<Tensor>,
    },
    Hier {
        blocks: Vec<(BlockCache, BlockCache)>,
        shallow: Option<SequenceCache>,
    },
}

/// State kept from [`Model::forward`] for [`Model::backward`].
#[derive(Debug, Clone)]
pub struct ForwardCache {
    layout: Layout,
    features: Tensor,
    net: NetCache,
}

impl ForwardCache {
    /// The `B×D` input of the output layer (the concatenated document
    /// vector for the hierarchical models).
    pub fn features(&self) -> &Tensor {
        &self.features
    }

    /// Sentence-level attention weights (`S×B`) of each hierarchical block.
    pub fn sentence_attention(&self) -> Vec<&Tensor> {
        match &self.net {
            NetCache::Hier { blocks, .. } => blocks.iter().map(|(_, s)| s.attention_weights()).collect(),
            _ => Vec::new(),
        }
    }
}

fn site_seed(seed: u64, site: usize) -> u64 {
    Rng::derive(seed, site as u64).next_u64()
}

fn scatter(embedding: &mut Parameter, ids: &[usize], grad: &Tensor, scale: &[f64]) {
    for (row, &id) in ids.iter().enumerate() {
        if id == PAD {
            continue;
        }
        let s = scale[row];
        for (g, v) in embedding.grad.row_mut(id).iter_mut().zip(grad.row(row)) {
            *g += s * v;
        }
    }
}

/// Builds a freshly initialized model; weights are drawn from `seed`.
pub fn build_model(spec: &ModelSpec, embeddings: &EmbeddingTable, seed: u64) -> Result<Model> {
    spec.validate()?;
    let d = embeddings.dim();
    let c = spec.num_classes;
    let mut rng = Rng::new(seed);
    let net = match spec.architecture {
        Architecture::EmbeddingBag => Net::Bag {
            fc: Affine::new("fc", d, c, &mut rng),
        },
        Architecture::Deeptriage => {
            let k = spec.block_sizes[0];
            Net::DeepTriage {
                forward: GruCell::new("gru_fwd", d, k, &mut rng),
                backward: GruCell::new("gru_bwd", d, k, &mut rng),
                fc1: Affine::new("fc1", 2 * k, spec.fc_width, &mut rng),
                fc2: Affine::new("fc2", spec.fc_width, c, &mut rng),
            }
        }
        Architecture::Han | Architecture::Proposed => {
            let blocks = spec
                .block_sizes
                .iter()
                .enumerate()
                .map(|(i, &k)| HierBlock {
                    word: DeepAttentionBlock::new(&format!("block{i}.word"), d, k, spec.dropout, spec.attention_projection, &mut rng),
                    sentence: DeepAttentionBlock::new(&format!("block{i}.sentence"), k, k, spec.dropout, spec.attention_projection, &mut rng),
                })
                .collect();
            let shallow = (spec.architecture == Architecture::Proposed && spec.shallow_size > 0).then(|| GruCell::new("shallow", d, spec.shallow_size, &mut rng));
            Net::Hier {
                blocks,
                shallow,
                fc: Affine::new("fc", spec.feature_dim(d), c, &mut rng),
            }
        }
    };
    Ok(Model {
        spec: spec.clone(),
        embedding: Parameter::new("embedding", embeddings.matrix().clone()),
        vocab_hash: embeddings.vocab_hash().to_string(),
        embedding_hash: embeddings.fingerprint(),
        net,
    })
}

impl Model {
    pub fn spec(&self) -> &ModelSpec {
        &self.spec
    }

    pub fn vocab_hash(&self) -> &str {
        &self.vocab_hash
    }

    /// Fingerprint of the embedding table the model was built with.
    pub fn embedding_hash(&self) -> &str {
        &self.embedding_hash
    }

    pub(crate) fn set_embedding_hash(&mut self, hash: String) {
        self.embedding_hash = hash;
    }

    pub fn vocab_size(&self) -> usize {
        self.embedding.value.rows()
    }

    pub fn embedding_dim(&self) -> usize {
        self.embedding.value.cols()
    }

    pub fn num_classes(&self) -> usize {
        self.spec.num_classes
    }

    /// Every parameter, the embedding table first.
    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = vec![&self.embedding];
        out.extend(self.net.parameters());
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = vec![&mut self.embedding];
        out.extend(self.net.parameters_mut());
        out
    }

    /// The parameters the optimizer updates: the embedding table only when
    /// fine-tuning is enabled.
    pub fn trainable_parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = Vec::new();
        if self.spec.fine_tune_embeddings {
            out.push(&mut self.embedding);
        }
        out.extend(self.net.parameters_mut());
        out
    }

    fn gather(&self, ids: &[usize]) -> Tensor {
        let d = self.embedding_dim();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            data.extend_from_slice(self.embedding.value.row(id));
        }
        Tensor::from_vec(&[ids.len(), d], data).expect("consistent shape")
    }

    fn gather_steps(&self, ids: &[Vec<usize>]) -> Vec<Tensor> {
        ids.iter().map(|row| self.gather(row)).collect()
    }

    fn check_ids(&self, docs: &[EncodedDocument]) -> Result<()> {
        let v = self.vocab_size();
        if let Some(&bad) = docs.iter().flatten().flatten().find(|&&id| id >= v) {
            return Err(Error::invalid(format!("token id {bad} out of range for vocabulary of {v}")));
        }
        Ok(())
    }

    /// Forward pass over a batch. Dropout masks are derived from `seed` in
    /// train mode; eval mode is deterministic.
    pub fn forward(&self, docs: &[EncodedDocument], mode: Mode, seed: u64) -> Result<(Tensor, ForwardCache)> {
        if docs.is_empty() {
            return Err(Error::invalid("forward pass over an empty batch"));
        }
        self.check_ids(docs)?;
        let docs: Vec<EncodedDocument> = docs.iter().map(normalize_document).collect();
        let layout = Layout::new(&docs);
        let (b_n, s_n) = (layout.batch, layout.sentences);
        match &self.net {
            Net::Bag { fc } => {
                let d = self.embedding_dim();
                let mut x = Tensor::zeros(&[b_n, d]);
                for (b, doc) in docs.iter().enumerate() {
                    let count = doc.iter().map(Vec::len).sum::<usize>() as f64;
                    let row = x.row_mut(b);
                    for &id in doc.iter().flatten() {
                        for (r, e) in row.iter_mut().zip(self.embedding.value.row(id)) {
                            *r += e;
                        }
                    }
                    row.iter_mut().for_each(|r| *r /= count);
                }
                let logits = fc.forward(&x)?;
                Ok((
                    logits,
                    ForwardCache {
                        layout,
                        features: x,
                        net: NetCache::Bag,
                    },
                ))
            }
            Net::DeepTriage { forward, backward, fc1, fc2 } => {
                let inputs = self.gather_steps(&layout.flat_ids);
                let (enc, seq) = encode_sequence(forward, Some(backward), &inputs, &layout.flat_mask)?;
                let hidden = fc1.forward(&enc.final_state)?.map(f64::tanh);
                let spec = DropoutSpec {
                    p: self.spec.dropout,
                    mode,
                    seed: site_seed(seed, 0),
                };
                let (features, mask) = dropout_with_mask(&hidden, &spec)?;
                let logits = fc2.forward(&features)?;
                Ok((
                    logits,
                    ForwardCache {
                        layout,
                        features,
                        net: NetCache::DeepTriage {
                            seq,
                            final_state: enc.final_state,
                            hidden,
                            mask,
                        },
                    },
                ))
            }
            Net::Hier { blocks, shallow, fc } => {
                let word_inputs = self.gather_steps(&layout.word_ids);
                let mut parts = Vec::with_capacity(blocks.len() + 1);
                let mut caches = Vec::with_capacity(blocks.len());
                for (i, blk) in blocks.iter().enumerate() {
                    let (sv, wc) = blk.word.forward(&word_inputs, &layout.word_mask, mode, site_seed(seed, 2 * i + 1))?;
                    let k = blk.word.output_dim();
                    let sent_inputs: Vec<Tensor> = (0..s_n)
                        .map(|s| {
                            let mut data = Vec::with_capacity(b_n * k);
                            for b in 0..b_n {
                                data.extend_from_slice(sv.row(b * s_n + s));
                            }
                            Tensor::from_vec(&[b_n, k], data).expect("consistent shape")
                        })
                        .collect();
                    let (doc, sc) = blk.sentence.forward(&sent_inputs, &layout.sentence_mask, mode, site_seed(seed, 2 * i + 2))?;
                    parts.push(doc);
                    caches.push((wc, sc));
                }
                let shallow_cache = match shallow {
                    Some(cell) => {
                        let inputs = self.gather_steps(&layout.flat_ids);
                        let (enc, cache) = encode_sequence(cell, None, &inputs, &layout.flat_mask)?;
                        parts.push(enc.final_state);
                        Some(cache)
                    }
                    None => None,
                };
                let features = concat_cols(&parts.iter().collect::<Vec<_>>());
                let logits = fc.forward(&features)?;
                Ok((
                    logits,
                    ForwardCache {
                        layout,
                        features,
                        net: NetCache::Hier {
                            blocks: caches,
                            shallow: shallow_cache,
                        },
                    },
                ))
            }
        }
    }

    /// Backward pass from `∂L/∂logits`; gradients are accumulated into the
    /// parameters (the embedding table only when fine-tuning).
    pub fn backward(&mut self, cache: &ForwardCache, d_logits: &Tensor) -> Result<()> {
        let fine_tune = self.spec.fine_tune_embeddings;
        let layout = &cache.layout;
        let Model { net, embedding, .. } = self;
        match (net, &cache.net) {
            (Net::Bag { fc }, NetCache::Bag) => {
                let dx = fc.backward(&cache.features, d_logits)?;
                if fine_tune {
                    let counts: Vec<f64> = (0..layout.batch)
                        .map(|b| 1.0 / layout.flat_mask.iter().filter(|m| m[b]).count() as f64)
                        .collect();
                    for ids in &layout.flat_ids {
                        scatter(embedding, ids, &dx, &counts);
                    }
                }
            }
            (Net::DeepTriage { forward, backward, fc1, fc2 }, NetCache::DeepTriage { seq, final_state, hidden, mask }) => {
                let mut dh = fc2.backward(&cache.features, d_logits)?;
                if let Some(m) = mask {
                    for (g, v) in dh.data_mut().iter_mut().zip(m.data()) {
                        *g *= v;
                    }
                }
                let da = tanh_backward(hidden, &dh);
                let d_final = fc1.backward(final_state, &da)?;
                let dx = encode_sequence_backward(forward, Some(backward), seq, None, Some(&d_final), fine_tune)?;
                if let Some(dx) = dx {
                    let ones = vec![1.0; layout.batch];
                    for (ids, g) in layout.flat_ids.iter().zip(&dx) {
                        scatter(embedding, ids, g, &ones);
                    }
                }
            }
            (Net::Hier { blocks, shallow, fc }, NetCache::Hier { blocks: caches, shallow: shallow_cache }) => {
                let d_features = fc.backward(&cache.features, d_logits)?;
                let mut widths: Vec<usize> = blocks.iter().map(|b| b.word.output_dim()).collect();
                if let Some(cell) = shallow.as_ref() {
                    widths.push(cell.hidden_dim());
                }
                let d_parts = split_cols(&d_features, &widths);
                let (b_n, s_n) = (layout.batch, layout.sentences);
                let ones_words = vec![1.0; b_n * s_n];
                for ((blk, (wc, sc)), d_doc) in blocks.iter_mut().zip(caches).zip(&d_parts) {
                    let d_sent = blk.sentence.backward(sc, d_doc, true)?.expect("input gradient requested");
                    let k = blk.word.output_dim();
                    let mut d_sv = Tensor::zeros(&[b_n * s_n, k]);
                    for (s, ds) in d_sent.iter().enumerate() {
                        for b in 0..b_n {
                            d_sv.row_mut(b * s_n + s).copy_from_slice(ds.row(b));
                        }
                    }
                    if let Some(dx) = blk.word.backward(wc, &d_sv, fine_tune)? {
                        for (ids, g) in layout.word_ids.iter().zip(&dx) {
                            scatter(embedding, ids, g, &ones_words);
                        }
                    }
                }
                if let (Some(cell), Some(sc)) = (shallow.as_mut(), shallow_cache) {
                    let d_final = d_parts.last().expect("shallow part");
                    if let Some(dx) = encode_sequence_backward(cell, None, sc, None, Some(d_final), fine_tune)? {
                        let ones = vec![1.0; b_n];
                        for (ids, g) in layout.flat_ids.iter().zip(&dx) {
                            scatter(embedding, ids, g, &ones);
                        }
                    }
                }
            }
            _ => return Err(Error::invalid("forward cache does not belong to this model")),
        }
        if fine_tune {
            embedding.grad.row_mut(PAD).fill(0.0);
        }
        Ok(())
    }

    /// Train-mode forward and backward pass; returns the mean cross-entropy.
    pub fn loss_and_backward(&mut self, docs: &[EncodedDocument], targets: &[usize], seed: u64) -> Result<f64> {
        let (logits, cache) = self.forward(docs, Mode::Train, seed)?;
        let (loss, d_logits) = cross_entropy(&softmax(&logits), targets)?;
        self.backward(&cache, &d_logits)?;
        Ok(loss)
    }

    /// Train-mode loss without a backward pass.
    pub fn loss(&self, docs: &[EncodedDocument], targets: &[usize], seed: u64) -> Result<f64> {
        let (logits, _) = self.forward(docs, Mode::Train, seed)?;
        Ok(cross_entropy(&softmax(&logits), targets)?.0)
    }

    /// Eval-mode logits.
    pub fn logits(&self, docs: &[EncodedDocument]) -> Result<Tensor> {
        self.forward(docs, Mode::Eval, 0).map(|(l, _)| l)
    }

    /// Eval-mode class probabilities, one row per document.
    pub fn predict_proba(&self, docs: &[EncodedDocument]) -> Result<Tensor> {
        Ok(softmax(&self.logits(docs)?))
    }

    /// Replaces parameter values by name; every parameter must be present
    /// with its current shape.
    pub fn load_parameters(&mut self, values: Vec<(String, Tensor)>) -> Result<()> {
        let mut map: std::collections::BTreeMap<String, Tensor> = values.into_iter().collect();
        for p in self.parameters_mut() {
            let t = map
                .remove(&p.name)
                .ok_or_else(|| Error::Format(format!("checkpoint lacks parameter {}", p.name)))?;
            if t.shape() != p.shape() {
                return Err(Error::ShapeMismatch {
                    op: "load_parameters",
                    left: p.shape().to_vec(),
                    right: t.shape().to_vec(),
                });
            }
            p.value = t;
        }
        if let Some(extra) = map.keys().next() {
            return Err(Error::Format(format!("checkpoint has unknown parameter {extra}")));
        }
        Ok(())
    }
}

/// Eval-mode prediction for one document: the arg-max class (ties toward
/// the smaller id) and the class probabilities.
pub fn predict(model: &Model, doc: &EncodedDocument) -> Result<(usize, Vec<f64>)> {
    let probs = model.predict_proba(std::slice::from_ref(doc))?;
    let row = probs.row(0).to_vec();
    Ok((argmax(&row), row))
}
