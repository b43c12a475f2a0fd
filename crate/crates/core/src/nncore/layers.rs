use serde::{Deserialize, Serialize};

use super::tensor::{gemm_a_bt_acc, gemm_acc, gemm_at_b_acc};
use super::{Parameter, Tensor};
use crate::rng::Rng;
use crate::{Error, Result};

/// Probabilities are clamped to this floor before taking logarithms.
const PROB_FLOOR: f64 = 1e-12;

fn affine_shapes(x: &Tensor, w: &Parameter, b: &Parameter) -> Result<(usize, usize, usize)> {
    let (batch, n) = x.expect_rank2("affine")?;
    let (wn, m) = w.value.expect_rank2("affine")?;
    if wn != n {
        return Err(Error::ShapeMismatch {
            op: "affine",
            left: x.shape().to_vec(),
            right: w.shape().to_vec(),
        });
    }
    if b.shape() != [m] {
        return Err(Error::ShapeMismatch {
            op: "affine bias",
            left: w.shape().to_vec(),
            right: b.shape().to_vec(),
        });
    }
    Ok((batch, n, m))
}

/// `y = x·W + b` for `x: B×n`, `W: n×m`, `b: m`.
pub fn affine_forward(x: &Tensor, w: &Parameter, b: &Parameter) -> Result<Tensor> {
    let (batch, n, m) = affine_shapes(x, w, b)?;
    let mut y = Tensor::zeros(&[batch, m]);
    for row in 0..batch {
        y.row_mut(row).copy_from_slice(b.value.data());
    }
    gemm_acc(x.data(), w.value.data(), y.data_mut(), batch, n, m);
    Ok(y)
}

/// Accumulates `dW += xᵀ·dy`, `db += Σ_rows dy` and returns `dx = dy·Wᵀ`.
pub fn affine_backward(x: &Tensor, w: &mut Parameter, b: &mut Parameter, dy: &Tensor) -> Result<Tensor> {
    let (batch, n, m) = affine_shapes(x, w, b)?;
    if dy.shape() != [batch, m] {
        return Err(Error::ShapeMismatch {
            op: "affine_backward",
            left: vec![batch, m],
            right: dy.shape().to_vec(),
        });
    }
    gemm_at_b_acc(x.data(), dy.data(), w.grad.data_mut(), batch, n, m);
    let db = b.grad.data_mut();
    for row in 0..batch {
        for (g, d) in db.iter_mut().zip(dy.row(row)) {
            *g += d;
        }
    }
    let mut dx = Tensor::zeros(&[batch, n]);
    gemm_a_bt_acc(dy.data(), w.value.data(), dx.data_mut(), batch, m, n);
    Ok(dx)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Affine {
    pub w: Parameter,
    pub b: Parameter,
}

impl Affine {
    pub fn new(name: &str, n: usize, m: usize, rng: &mut Rng) -> Self {
        Affine {
            w: Parameter::glorot(format!("{name}.w"), &[n, m], n, m, rng),
            b: Parameter::zeros(format!("{name}.b"), &[m]),
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w.shape()[0]
    }

    pub fn output_dim(&self) -> usize {
        self.w.shape()[1]
    }

    pub fn forward(&self, x: &Tensor) -> Result<Tensor> {
        affine_forward(x, &self.w, &self.b)
    }

    pub fn backward(&mut self, x: &Tensor, dy: &Tensor) -> Result<Tensor> {
        affine_backward(x, &mut self.w, &mut self.b, dy)
    }

    pub fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.w, &mut self.b]
    }

    pub fn parameters(&self) -> Vec<&Parameter> {
        vec![&self.w, &self.b]
    }
}

/// Row-wise softmax over the last axis, with max subtraction.
pub fn softmax(z: &Tensor) -> Tensor {
    let mut out = z.clone();
    let cols = z.cols();
    if cols == 0 {
        return out;
    }
    for row in out.data_mut().chunks_mut(cols) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut sum = 0.0;
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum += *v;
        }
        for v in row.iter_mut() {
            *v /= sum;
        }
    }
    out
}

pub fn log_softmax(z: &Tensor) -> Tensor {
    let mut out = z.clone();
    let cols = z.cols();
    for row in out.data_mut().chunks_mut(cols.max(1)) {
        let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lse = max + row.iter().map(|v| (v - max).exp()).sum::<f64>().ln();
        for v in row.iter_mut() {
            *v -= lse;
        }
    }
    out
}

/// Mean of `-ln p[true]` over the batch, and the gradient with respect to
/// the pre-softmax logits, `(p - onehot) / B`.
pub fn cross_entropy(probs: &Tensor, targets: &[usize]) -> Result<(f64, Tensor)> {
    let (batch, classes) = probs.expect_rank2("cross_entropy")?;
    if targets.len() != batch {
        return Err(Error::ShapeMismatch {
            op: "cross_entropy",
            left: probs.shape().to_vec(),
            right: vec![targets.len()],
        });
    }
    if let Some(&bad) = targets.iter().find(|&&t| t >= classes) {
        return Err(Error::invalid(format!("class id {bad} >= number of classes {classes}")));
    }
    let scale = 1.0 / batch as f64;
    let mut loss = 0.0;
    let mut grad = probs.clone();
    for (row, &t) in targets.iter().enumerate() {
        loss -= probs.row(row)[t].max(PROB_FLOOR).ln();
        let g = grad.row_mut(row);
        g[t] -= 1.0;
        g.iter_mut().for_each(|v| *v *= scale);
    }
    Ok((loss * scale, grad))
}

pub fn tanh_forward(x: &Tensor) -> Tensor {
    x.map(f64::tanh)
}

/// Gradient through `y = tanh(x)` given the forward output `y`.
pub fn tanh_backward(y: &Tensor, dy: &Tensor) -> Tensor {
    let mut dx = dy.clone();
    for (d, &v) in dx.data_mut().iter_mut().zip(y.data()) {
        *d *= 1.0 - v * v;
    }
    dx
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DropoutSpec {
    pub p: f64,
    pub mode: Mode,
    pub seed: u64,
}

impl Default for DropoutSpec {
    fn default() -> Self {
        DropoutSpec {
            p: 0.5,
            mode: Mode::Train,
            seed: 0,
        }
    }
}

impl DropoutSpec {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..1.0).contains(&self.p) {
            return Err(Error::invalid(format!("dropout probability {} is outside [0, 1)", self.p)));
        }
        Ok(())
    }
}

/// Inverted dropout. Returns the output and, in train mode with `p > 0`,
/// the multiplicative mask (0 or `1/(1-p)`) needed by the backward pass.
pub fn dropout_with_mask(x: &Tensor, spec: &DropoutSpec) -> Result<(Tensor, Option<Tensor>)> {
    spec.validate()?;
    if spec.mode == Mode::Eval || spec.p == 0.0 {
        return Ok((x.clone(), None));
    }
    let keep = 1.0 / (1.0 - spec.p);
    let mut rng = Rng::new(spec.seed);
    let data = x.data().iter().map(|_| if rng.next_f64() < spec.p { 0.0 } else { keep }).collect();
    let mask = Tensor::from_vec(x.shape(), data)?;
    let mut y = x.clone();
    for (v, m) in y.data_mut().iter_mut().zip(mask.data()) {
        *v *= m;
    }
    Ok((y, Some(mask)))
}

pub fn dropout(x: &Tensor, spec: &DropoutSpec) -> Result<Tensor> {
    dropout_with_mask(x, spec).map(|(y, _)| y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_identity_and_arithmetic() {
        let mut w = Parameter::zeros("w", &[2, 2]);
        w.value = Tensor::from_rows(&[vec![1.0, 0.0], vec![0.0, 1.0]]).unwrap();
        let zero_b = Parameter::zeros("b", &[2]);
        let x = Tensor::from_rows(&[vec![1.0, 2.0], vec![-3.0, 0.5]]).unwrap();
        assert_eq!(affine_forward(&x, &w, &zero_b).unwrap(), x);
        let b = Parameter::new("b", Tensor::from_vec(&[2], vec![3.0, 4.0]).unwrap());
        let y = affine_forward(&Tensor::from_rows(&[vec![1.0, 2.0]]).unwrap(), &w, &b).unwrap();
        assert_eq!(y.data(), &[4.0, 6.0]);
    }

    #[test]
    fn affine_shape_error_names_both_shapes() {
        let w = Parameter::zeros("w", &[3, 2]);
        let b = Parameter::zeros("b", &[2]);
        let err = affine_forward(&Tensor::zeros(&[1, 2]), &w, &b).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[1, 2]") && msg.contains("[3, 2]"), "{msg}");
    }

    #[test]
    fn softmax_examples() {
        let p = softmax(&Tensor::from_rows(&[vec![0.0, 0.0]]).unwrap());
        assert_eq!(p.data(), &[0.5, 0.5]);
        let p = softmax(&Tensor::from_rows(&[vec![1000.0, 0.0]]).unwrap());
        assert!(p.all_finite());
        assert!((p.data()[0] - 1.0).abs() < 1e-12 && p.data()[1] < 1e-300);
        let p = softmax(&Tensor::from_rows(&[vec![2f64.ln(), 0.0]]).unwrap());
        assert!((p.data()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p.data()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn softmax_rows_sum_and_shift_invariance() {
        let mut rng = Rng::new(4);
        let z = Tensor::uniform(&[5, 7], 10.0, &mut rng);
        let p = softmax(&z);
        for r in 0..5 {
            assert!((p.row(r).iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
        let shifted = z.map(|v| v + 37.5);
        assert!(softmax(&shifted).max_abs_diff(&p) < 1e-9);
        let lp = log_softmax(&z);
        assert!(lp.map(f64::exp).max_abs_diff(&p) < 1e-12);
    }

    #[test]
    fn cross_entropy_examples() {
        let perfect = Tensor::from_rows(&[vec![0.0, 1.0, 0.0]]).unwrap();
        assert_eq!(cross_entropy(&perfect, &[1]).unwrap().0, 0.0);
        let half = Tensor::from_rows(&[vec![0.5, 0.5]]).unwrap();
        assert!((cross_entropy(&half, &[0]).unwrap().0 - std::f64::consts::LN_2).abs() < 1e-12);
        for c in 1..12 {
            let uniform = Tensor::filled(&[3, c], 1.0 / c as f64);
            let (loss, _) = cross_entropy(&uniform, &[0, c - 1, c / 2]).unwrap();
            assert!((loss - (c as f64).ln()).abs() < 1e-9);
        }
        assert!(cross_entropy(&half, &[2]).is_err());
        // clamped log of zero stays finite
        let zero = Tensor::from_rows(&[vec![1.0, 0.0]]).unwrap();
        assert!(cross_entropy(&zero, &[1]).unwrap().0.is_finite());
    }

    #[test]
    fn dropout_modes() {
        let x = Tensor::filled(&[4, 5], 2.0);
        let eval = DropoutSpec { mode: Mode::Eval, ..Default::default() };
        assert_eq!(dropout(&x, &eval).unwrap(), x);
        let p0 = DropoutSpec { p: 0.0, ..Default::default() };
        assert_eq!(dropout(&x, &p0).unwrap(), x);
        let bad = DropoutSpec { p: 1.0, ..Default::default() };
        assert!(dropout(&x, &bad).is_err());
        let train = DropoutSpec { p: 0.5, mode: Mode::Train, seed: 3 };
        let y = dropout(&x, &train).unwrap();
        assert!(y.data().iter().all(|&v| v == 0.0 || v == 4.0));
        assert_eq!(y, dropout(&x, &train).unwrap());
    }

    #[test]
    fn dropout_preserves_mean() {
        let x = Tensor::filled(&[100, 100], 1.0);
        for seed in 0..5 {
            let y = dropout(&x, &DropoutSpec { p: 0.5, mode: Mode::Train, seed }).unwrap();
            let mean = y.data().iter().sum::<f64>() / y.len() as f64;
            assert!((mean - 1.0).abs() < 0.02, "seed {seed}: mean {mean}");
        }
    }
}
