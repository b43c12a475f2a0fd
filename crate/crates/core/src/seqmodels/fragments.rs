//! [`GradFragment`] wrappers used to check the hand-written backward passes
//! of the sequence layers and of whole models.

use super::attention::AttentionPool;
use super::gru::{encode_sequence, encode_sequence_backward, GruCell, StepMask};
use super::model::{build_model, Architecture, Model, ModelSpec};
use crate::embeddings::EmbeddingTable;
use crate::nncore::{GradFragment, Parameter, Tensor};
use crate::preprocess::{EncodedDocument, Vocabulary};
use crate::rng::Rng;
use crate::Result;

fn weighted_sum(a: &Tensor, r: &Tensor) -> f64 {
    a.data().iter().zip(r.data()).map(|(x, y)| x * y).sum()
}

/// A GRU (optionally bidirectional) unrolled over a few steps with a padded
/// tail on one row; the loss is a fixed random projection of every output
/// and of the final state. The inputs are checked as parameters too.
pub struct GruSequenceFragment {
    pub forward: GruCell,
    pub backward: Option<GruCell>,
    pub inputs: Vec<Parameter>,
    mask: StepMask,
    r_outputs: Vec<Tensor>,
    r_final: Tensor,
}

impl GruSequenceFragment {
    pub fn new(steps: usize, rows: usize, n: usize, k: usize, bidirectional: bool, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let forward = GruCell::new("fwd", n, k, &mut rng);
        let backward = bidirectional.then(|| GruCell::new("bwd", n, k, &mut rng));
        let inputs = (0..steps)
            .map(|t| Parameter::new(format!("x{t}"), Tensor::uniform(&[rows, n], 1.0, &mut rng)))
            .collect();
        let mask = (0..steps).map(|t| (0..rows).map(|b| b == 0 || t + 1 < steps).collect()).collect();
        let width = if bidirectional { 2 * k } else { k };
        let r_outputs = (0..steps).map(|_| Tensor::uniform(&[rows, width], 1.0, &mut rng)).collect();
        let r_final = Tensor::uniform(&[rows, width], 1.0, &mut rng);
        GruSequenceFragment {
            forward,
            backward,
            inputs,
            mask,
            r_outputs,
            r_final,
        }
    }

    fn run(&mut self, backprop: bool) -> Result<f64> {
        let xs: Vec<Tensor> = self.inputs.iter().map(|p| p.value.clone()).collect();
        let (enc, cache) = encode_sequence(&self.forward, self.backward.as_ref(), &xs, &self.mask)?;
        let loss = enc.outputs.iter().zip(&self.r_outputs).map(|(o, r)| weighted_sum(o, r)).sum::<f64>() + weighted_sum(&enc.final_state, &self.r_final);
        if backprop {
            let dx = encode_sequence_backward(&mut self.forward, self.backward.as_mut(), &cache, Some(&self.r_outputs), Some(&self.r_final), true)?
                .expect("input gradient requested");
            for (p, g) in self.inputs.iter_mut().zip(&dx) {
                p.grad.add_assign(g)?;
            }
        }
        Ok(loss)
    }
}

impl GradFragment for GruSequenceFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = self.forward.parameters_mut();
        if let Some(b) = &mut self.backward {
            out.extend(b.parameters_mut());
        }
        out.extend(self.inputs.iter_mut());
        out
    }

    fn loss(&mut self) -> Result<f64> {
        self.run(false)
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        self.run(true)
    }
}

/// Attention pooling over random encoder outputs with one masked step; the
/// loss is a random projection of the pooled vectors.
pub struct AttentionFragment {
    pub pool: AttentionPool,
    pub outputs: Vec<Parameter>,
    mask: StepMask,
    r: Tensor,
}

impl AttentionFragment {
    pub fn new(steps: usize, rows: usize, k: usize, projection: bool, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let pool = AttentionPool::new("attn", k, projection, &mut rng);
        let outputs = (0..steps)
            .map(|t| Parameter::new(format!("h{t}"), Tensor::uniform(&[rows, k], 1.0, &mut rng)))
            .collect();
        let mask = (0..steps).map(|t| (0..rows).map(|b| b == 0 || t + 1 < steps).collect()).collect();
        let r = Tensor::uniform(&[rows, k], 1.0, &mut rng);
        AttentionFragment { pool, outputs, mask, r }
    }

    fn run(&mut self, backprop: bool) -> Result<f64> {
        let hs: Vec<Tensor> = self.outputs.iter().map(|p| p.value.clone()).collect();
        let (pooled, cache) = self.pool.forward(&hs, &self.mask, false)?;
        if backprop {
            let dh = self.pool.backward(&cache, &self.r)?;
            for (p, g) in self.outputs.iter_mut().zip(&dh) {
                p.grad.add_assign(g)?;
            }
        }
        Ok(weighted_sum(&pooled, &self.r))
    }
}

impl GradFragment for AttentionFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = self.pool.parameters_mut();
        out.extend(self.outputs.iter_mut());
        out
    }

    fn loss(&mut self) -> Result<f64> {
        self.run(false)
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        self.run(true)
    }
}

/// Cross-entropy of a whole model on a fixed batch, in train mode with a
/// fixed dropout seed so repeated evaluations see the same masks.
pub struct ModelFragment {
    pub model: Model,
    pub docs: Vec<EncodedDocument>,
    pub targets: Vec<usize>,
    pub seed: u64,
}

impl ModelFragment {
    /// Two documents of two sentences (3 tokens each, the second document's
    /// last sentence shorter), 2 classes, tiny layer sizes and fine-tuned
    /// embeddings so that every parameter is checked.
    pub fn micro_instance(architecture: Architecture, seed: u64) -> Result<Self> {
        let vocab = Vocabulary::from_tokens(["a", "b", "c", "d", "e", "f"]);
        let table = EmbeddingTable::random(&vocab, 3, seed ^ 0x5eed);
        let mut table_values = table.matrix().clone();
        // the default table is tiny (±0.5/d); scale it up to exercise the nonlinearities
        table_values.scale(4.0);
        let table = EmbeddingTable::new(table_values, table.vocab_hash())?;
        let spec = ModelSpec {
            architecture,
            block_sizes: if architecture == Architecture::Proposed { vec![2, 3] } else { vec![3] },
            shallow_size: 2,
            fc_width: 3,
            dropout: 0.5,
            num_classes: 2,
            attention_projection: false,
            fine_tune_embeddings: true,
        };
        let model = build_model(&spec, &table, seed)?;
        Ok(ModelFragment {
            model,
            docs: vec![vec![vec![2, 3, 4], vec![5, 6, 7]], vec![vec![7, 2, 2], vec![3, 6]]],
            targets: vec![0, 1],
            seed,
        })
    }
}

impl GradFragment for ModelFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        self.model.trainable_parameters_mut()
    }

    fn loss(&mut self) -> Result<f64> {
        self.model.loss(&self.docs, &self.targets, self.seed)
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        self.model.loss_and_backward(&self.docs, &self.targets, self.seed)
    }
}
