use super::attention::{AttentionCache, AttentionPool};
use super::gru::{encode_sequence, encode_sequence_backward, GruCell, SequenceCache};
use crate::nncore::{dropout_with_mask, DropoutSpec, Mode, Parameter, Tensor};
use crate::rng::Rng;
use crate::Result;

/// GRU encoder, attention pooling over its outputs, then dropout.
#[derive(Debug, Clone, PartialEq)]
pub struct DeepAttentionBlock {
    pub gru: GruCell,
    pub pool: AttentionPool,
    pub dropout: f64,
}

#[derive(Debug, Clone)]
pub struct BlockCache {
    seq: SequenceCache,
    attn: AttentionCache,
    mask: Option<Tensor>,
}

impl BlockCache {
    pub fn attention_weights(&self) -> &Tensor {
        self.attn.weights()
    }
}

impl DeepAttentionBlock {
    pub fn new(name: &str, n: usize, k: usize, dropout: f64, projection: bool, rng: &mut Rng) -> Self {
        let gru = GruCell::new(&format!("{name}.gru"), n, k, rng);
        let pool = AttentionPool::new(&format!("{name}.attn"), k, projection, rng);
        DeepAttentionBlock { gru, pool, dropout }
    }

    pub fn output_dim(&self) -> usize {
        self.gru.hidden_dim()
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = self.gru.parameters();
        out.extend(self.pool.parameters());
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = self.gru.parameters_mut();
        out.extend(self.pool.parameters_mut());
        out
    }

    /// Encodes one `B×n` input per step into `B×k`; rows without any
    /// unmasked step come out as zero.
    pub fn forward(&self, inputs: &[Tensor], mask: &[Vec<bool>], mode: Mode, seed: u64) -> Result<(Tensor, BlockCache)> {
        let (enc, seq) = encode_sequence(&self.gru, None, inputs, mask)?;
        let (pooled, attn) = self.pool.forward(&enc.outputs, mask, true)?;
        let spec = DropoutSpec {
            p: self.dropout,
            mode,
            seed,
        };
        let (out, mask) = dropout_with_mask(&pooled, &spec)?;
        Ok((out, BlockCache { seq, attn, mask }))
    }

    pub fn backward(&mut self, cache: &BlockCache, d_out: &Tensor, need_dx: bool) -> Result<Option<Vec<Tensor>>> {
        let mut d = d_out.clone();
        if let Some(m) = &cache.mask {
            for (g, v) in d.data_mut().iter_mut().zip(m.data()) {
                *g *= v;
            }
        }
        let d_outputs = self.pool.backward(&cache.attn, &d)?;
        encode_sequence_backward(&mut self.gru, None, &cache.seq, Some(&d_outputs), None, need_dx)
    }
}
