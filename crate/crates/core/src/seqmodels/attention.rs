//! Attention pooling with a learned context vector.
//!
//! Scores are `h_t·u` (or `tanh(h_t W + b)·u` with the projection enabled),
//! softmax-normalized over the unmasked steps of each row.

use crate::nncore::{Affine, Parameter, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct AttentionPool {
    pub u: Parameter,
    pub projection: Option<Affine>,
}

#[derive(Debug, Clone)]
pub struct AttentionCache {
    outputs: Vec<Tensor>,
    keys: Option<Vec<Tensor>>,
    weights: Tensor,
}

impl AttentionCache {
    /// `T×B` attention weights.
    pub fn weights(&self) -> &Tensor {
        &self.weights
    }
}

impl AttentionPool {
    pub fn new(name: &str, k: usize, projection: bool, rng: &mut Rng) -> Self {
        let u = Parameter::new(format!("{name}.u"), Tensor::uniform(&[k], 1.0 / (k as f64).sqrt(), rng));
        let projection = projection.then(|| Affine::new(&format!("{name}.proj"), k, k, rng));
        AttentionPool { u, projection }
    }

    pub fn dim(&self) -> usize {
        self.u.value.len()
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        let mut out = vec![&self.u];
        if let Some(p) = &self.projection {
            out.extend(p.parameters());
        }
        out
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        let mut out = vec![&mut self.u];
        if let Some(p) = &mut self.projection {
            out.extend(p.parameters_mut());
        }
        out
    }

    /// Pools `outputs` (one `B×k` tensor per step) into `B×k`. Rows with no
    /// unmasked step are an error unless `allow_empty`, in which case they
    /// pool to zero.
    pub fn forward(&self, outputs: &[Tensor], mask: &[Vec<bool>], allow_empty: bool) -> Result<(Tensor, AttentionCache)> {
        let k = self.dim();
        let rows = match outputs.first() {
            Some(o) => o.rows(),
            None => return Err(Error::invalid("attention over an empty sequence")),
        };
        if mask.len() != outputs.len() {
            return Err(Error::ShapeMismatch {
                op: "attention_pool mask",
                left: vec![outputs.len()],
                right: vec![mask.len()],
            });
        }
        for (o, m) in outputs.iter().zip(mask) {
            if o.shape() != [rows, k] || m.len() != rows {
                return Err(Error::ShapeMismatch {
                    op: "attention_pool",
                    left: vec![rows, k],
                    right: o.shape().to_vec(),
                });
            }
        }
        let keys = match &self.projection {
            Some(p) => Some(
                outputs
                    .iter()
                    .map(|h| p.forward(h).map(|a| a.map(f64::tanh)))
                    .collect::<Result<Vec<_>>>()?,
            ),
            None => None,
        };
        let key = |t: usize| keys.as_ref().map_or(&outputs[t], |ks| &ks[t]);
        let u = self.u.value.data();
        let steps = outputs.len();
        let mut weights = Tensor::zeros(&[steps, rows]);
        let mut pooled = Tensor::zeros(&[rows, k]);
        for b in 0..rows {
            let live: Vec<usize> = (0..steps).filter(|&t| mask[t][b]).collect();
            if live.is_empty() {
                if allow_empty {
                    continue;
                }
                return Err(Error::invalid(format!("attention row {b} is fully masked")));
            }
            let scores: Vec<f64> = live
                .iter()
                .map(|&t| key(t).row(b).iter().zip(u).map(|(x, y)| x * y).sum())
                .collect();
            let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = scores.iter().map(|s| (s - max).exp()).collect();
            let sum: f64 = exps.iter().sum();
            for (&t, e) in live.iter().zip(&exps) {
                let a = e / sum;
                weights.row_mut(t)[b] = a;
                for (p, h) in pooled.row_mut(b).iter_mut().zip(outputs[t].row(b)) {
                    *p += a * h;
                }
            }
        }
        Ok((
            pooled,
            AttentionCache {
                outputs: outputs.to_vec(),
                keys,
                weights,
            },
        ))
    }

    /// Accumulates `∂L/∂u` (and projection gradients) and returns the
    /// gradient for each step's outputs.
    pub fn backward(&mut self, cache: &AttentionCache, d_pooled: &Tensor) -> Result<Vec<Tensor>> {
        let steps = cache.outputs.len();
        let (rows, k) = (cache.outputs[0].rows(), self.dim());
        if d_pooled.shape() != [rows, k] {
            return Err(Error::ShapeMismatch {
                op: "attention_pool backward",
                left: vec![rows, k],
                right: d_pooled.shape().to_vec(),
            });
        }
        let mut d_out = vec![Tensor::zeros(&[rows, k]); steps];
        let mut d_keys = vec![Tensor::zeros(&[rows, k]); steps];
        let u = self.u.value.data().to_vec();
        let key = |t: usize| cache.keys.as_ref().map_or(&cache.outputs[t], |ks| &ks[t]);
        for b in 0..rows {
            let dp = d_pooled.row(b);
            let live: Vec<usize> = (0..steps).filter(|&t| cache.weights.row(t)[b] > 0.0).collect();
            if live.is_empty() {
                continue;
            }
            let d_alpha: Vec<f64> = live
                .iter()
                .map(|&t| dp.iter().zip(cache.outputs[t].row(b)).map(|(x, y)| x * y).sum())
                .collect();
            let mean: f64 = live.iter().zip(&d_alpha).map(|(&t, d)| cache.weights.row(t)[b] * d).sum();
            for (&t, da) in live.iter().zip(&d_alpha) {
                let a = cache.weights.row(t)[b];
                for (g, p) in d_out[t].row_mut(b).iter_mut().zip(dp) {
                    *g += a * p;
                }
                let ds = a * (da - mean);
                for (g, kv) in self.u.grad.data_mut().iter_mut().zip(key(t).row(b)) {
                    *g += ds * kv;
                }
                for (g, uv) in d_keys[t].row_mut(b).iter_mut().zip(&u) {
                    *g += ds * uv;
                }
            }
        }
        match (&mut self.projection, &cache.keys) {
            (Some(p), Some(keys)) => {
                for t in 0..steps {
                    let mut d_pre = d_keys[t].clone();
                    for (d, kv) in d_pre.data_mut().iter_mut().zip(keys[t].data()) {
                        *d *= 1.0 - kv * kv;
                    }
                    let dh = p.backward(&cache.outputs[t], &d_pre)?;
                    d_out[t].add_assign(&dh)?;
                }
            }
            _ => {
                for (d, dk) in d_out.iter_mut().zip(&d_keys) {
                    d.add_assign(dk)?;
                }
            }
        }
        Ok(d_out)
    }
}

/// Pools `outputs` with `pool`; returns the pooled `B×k` tensor and the
/// `T×B` weights. A fully masked row is an error.
pub fn attention_pool(outputs: &[Tensor], mask: &[Vec<bool>], pool: &AttentionPool) -> Result<(Tensor, Tensor)> {
    let (pooled, cache) = pool.forward(outputs, mask, false)?;
    Ok((pooled, cache.weights))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identical_states_pool_to_themselves() {
        let mut rng = Rng::new(1);
        let pool = AttentionPool::new("a", 3, false, &mut rng);
        let v = Tensor::from_rows(&[vec![0.5, -1.0, 2.0]]).unwrap();
        let outputs = vec![v.clone(); 4];
        let (pooled, weights) = attention_pool(&outputs, &vec![vec![true]; 4], &pool).unwrap();
        assert!(pooled.max_abs_diff(&v) < 1e-15);
        for t in 0..4 {
            assert!((weights.row(t)[0] - 0.25).abs() < 1e-15);
        }
    }

    #[test]
    fn single_step_gets_full_weight() {
        let mut rng = Rng::new(2);
        let pool = AttentionPool::new("a", 2, true, &mut rng);
        let h = Tensor::from_rows(&[vec![0.3, 0.1], vec![-1.0, 4.0]]).unwrap();
        let (pooled, weights) = attention_pool(&[h.clone()], &[vec![true, true]], &pool).unwrap();
        assert_eq!(pooled, h);
        assert_eq!(weights.data(), &[1.0, 1.0]);
    }

    #[test]
    fn masked_steps_get_zero_weight() {
        let mut rng = Rng::new(3);
        let pool = AttentionPool::new("a", 2, false, &mut rng);
        let outputs: Vec<Tensor> = (0..3).map(|_| Tensor::uniform(&[2, 2], 1.0, &mut rng)).collect();
        let mask = vec![vec![true, true], vec![false, true], vec![true, false]];
        let (_, w) = attention_pool(&outputs, &mask, &pool).unwrap();
        assert_eq!(w.row(1)[0], 0.0);
        assert_eq!(w.row(2)[1], 0.0);
        for b in 0..2 {
            let s: f64 = (0..3).map(|t| w.row(t)[b]).sum();
            assert!((s - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn fully_masked_row() {
        let mut rng = Rng::new(4);
        let pool = AttentionPool::new("a", 2, false, &mut rng);
        let outputs = vec![Tensor::filled(&[2, 2], 1.0)];
        let mask = vec![vec![true, false]];
        assert!(attention_pool(&outputs, &mask, &pool).is_err());
        let (pooled, _) = pool.forward(&outputs, &mask, true).unwrap();
        assert_eq!(pooled.row(1), &[0.0, 0.0]);
    }
}
