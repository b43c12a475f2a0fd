use super::layers::{affine_backward, affine_forward, cross_entropy, dropout_with_mask, softmax, DropoutSpec, Mode};
use super::{Parameter, Tensor};
use crate::rng::Rng;
use crate::Result;

pub const FD_STEP: f64 = 1e-4;

/// A differentiable scalar function of its parameters.
pub trait GradFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter>;

    /// Forward pass only.
    fn loss(&mut self) -> Result<f64>;

    /// Forward and backward pass; gradients are accumulated into the
    /// parameters.
    fn loss_and_backward(&mut self) -> Result<f64>;
}

#[derive(Debug, Clone)]
pub struct GradCheckReport {
    /// Largest relative error per parameter, in parameter order.
    pub per_parameter: Vec<(String, f64)>,
    pub max_rel_error: f64,
}

impl GradCheckReport {
    pub fn worst(&self) -> Option<&(String, f64)> {
        self.per_parameter
            .iter()
            .max_by(|a, b| a.1.total_cmp(&b.1))
    }
}

pub fn relative_error(analytic: f64, numeric: f64) -> f64 {
    (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(1e-8)
}

/// Compares analytic gradients with central differences of step `h` for
/// every scalar in every parameter.
pub fn gradient_check(fragment: &mut dyn GradFragment, h: f64) -> Result<GradCheckReport> {
    for p in fragment.parameters_mut() {
        p.zero_grad();
    }
    fragment.loss_and_backward()?;
    let analytic: Vec<(String, Vec<f64>)> = fragment
        .parameters_mut()
        .into_iter()
        .map(|p| (p.name.clone(), p.grad.data().to_vec()))
        .collect();

    let mut per_parameter = Vec::with_capacity(analytic.len());
    for (pi, (name, grads)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for (e, &a) in grads.iter().enumerate() {
            let original = fragment.parameters_mut()[pi].value.data()[e];
            fragment.parameters_mut()[pi].value.data_mut()[e] = original + h;
            let plus = fragment.loss()?;
            fragment.parameters_mut()[pi].value.data_mut()[e] = original - h;
            let minus = fragment.loss()?;
            fragment.parameters_mut()[pi].value.data_mut()[e] = original;
            let numeric = (plus - minus) / (2.0 * h);
            worst = worst.max(relative_error(a, numeric));
        }
        per_parameter.push((name.clone(), worst));
    }
    for p in fragment.parameters_mut() {
        p.zero_grad();
    }
    let max_rel_error = per_parameter.iter().map(|(_, e)| *e).fold(0.0, f64::max);
    Ok(GradCheckReport {
        per_parameter,
        max_rel_error,
    })
}

/// Weighted sum of the outputs with fixed random weights; gives every
/// output a distinct non-trivial upstream gradient.
fn projection_loss(y: &Tensor, r: &Tensor) -> f64 {
    y.data().iter().zip(r.data()).map(|(a, b)| a * b).sum()
}

/// `loss = Σ (x·W + b) ∘ R`, with the input `x` checked as a parameter.
pub struct AffineFragment {
    pub x: Parameter,
    pub w: Parameter,
    pub b: Parameter,
    r: Tensor,
}

impl AffineFragment {
    pub fn new(batch: usize, n: usize, m: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        AffineFragment {
            x: Parameter::new("x", Tensor::uniform(&[batch, n], 1.0, &mut rng)),
            w: Parameter::new("w", Tensor::uniform(&[n, m], 1.0, &mut rng)),
            b: Parameter::new("b", Tensor::uniform(&[m], 1.0, &mut rng)),
            r: Tensor::uniform(&[batch, m], 1.0, &mut rng),
        }
    }
}

impl GradFragment for AffineFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.x, &mut self.w, &mut self.b]
    }

    fn loss(&mut self) -> Result<f64> {
        Ok(projection_loss(&affine_forward(&self.x.value, &self.w, &self.b)?, &self.r))
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        let y = affine_forward(&self.x.value, &self.w, &self.b)?;
        let dx = affine_backward(&self.x.value, &mut self.w, &mut self.b, &self.r)?;
        self.x.grad.add_assign(&dx)?;
        Ok(projection_loss(&y, &self.r))
    }
}

/// Cross-entropy of softmax(logits) against fixed targets.
pub struct SoftmaxCrossEntropyFragment {
    pub logits: Parameter,
    targets: Vec<usize>,
}

impl SoftmaxCrossEntropyFragment {
    pub fn new(batch: usize, classes: usize, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        let logits = Parameter::new("logits", Tensor::uniform(&[batch, classes], 3.0, &mut rng));
        let targets = (0..batch).map(|_| rng.below(classes)).collect();
        SoftmaxCrossEntropyFragment { logits, targets }
    }
}

impl GradFragment for SoftmaxCrossEntropyFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.logits]
    }

    fn loss(&mut self) -> Result<f64> {
        cross_entropy(&softmax(&self.logits.value), &self.targets).map(|(l, _)| l)
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        let (loss, grad) = cross_entropy(&softmax(&self.logits.value), &self.targets)?;
        self.logits.grad.add_assign(&grad)?;
        Ok(loss)
    }
}

/// `loss = Σ dropout(x) ∘ R` with a fixed mask seed.
pub struct DropoutFragment {
    pub x: Parameter,
    spec: DropoutSpec,
    r: Tensor,
}

impl DropoutFragment {
    pub fn new(shape: &[usize], p: f64, mode: Mode, seed: u64) -> Self {
        let mut rng = Rng::new(seed);
        DropoutFragment {
            x: Parameter::new("x", Tensor::uniform(shape, 1.0, &mut rng)),
            spec: DropoutSpec { p, mode, seed },
            r: Tensor::uniform(shape, 1.0, &mut rng),
        }
    }
}

impl GradFragment for DropoutFragment {
    fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
        vec![&mut self.x]
    }

    fn loss(&mut self) -> Result<f64> {
        let (y, _) = dropout_with_mask(&self.x.value, &self.spec)?;
        Ok(projection_loss(&y, &self.r))
    }

    fn loss_and_backward(&mut self) -> Result<f64> {
        let (y, mask) = dropout_with_mask(&self.x.value, &self.spec)?;
        let mut dx = self.r.clone();
        if let Some(mask) = mask {
            for (d, m) in dx.data_mut().iter_mut().zip(mask.data()) {
                *d *= m;
            }
        }
        self.x.grad.add_assign(&dx)?;
        Ok(projection_loss(&y, &self.r))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_passes_over_random_shapes() {
        let mut rng = Rng::new(99);
        for seed in 0..8 {
            let (b, n, m) = (1 + rng.below(5), 1 + rng.below(5), 1 + rng.below(5));
            let report = gradient_check(&mut AffineFragment::new(b, n, m, seed), FD_STEP).unwrap();
            assert!(report.max_rel_error < 1e-4, "{b}x{n}x{m}: {report:?}");
        }
    }

    #[test]
    fn softmax_cross_entropy_passes() {
        for seed in 0..5 {
            let report = gradient_check(&mut SoftmaxCrossEntropyFragment::new(3, 4, seed), FD_STEP).unwrap();
            assert!(report.max_rel_error < 1e-4, "{report:?}");
        }
    }

    #[test]
    fn dropout_passes_in_both_modes() {
        for seed in 0..5 {
            for mode in [Mode::Train, Mode::Eval] {
                let report = gradient_check(&mut DropoutFragment::new(&[3, 4], 0.5, mode, seed), FD_STEP).unwrap();
                assert!(report.max_rel_error < 1e-4, "{report:?}");
            }
        }
    }

    #[test]
    fn detects_a_wrong_gradient() {
        struct Broken(Parameter);
        impl GradFragment for Broken {
            fn parameters_mut(&mut self) -> Vec<&mut Parameter> {
                vec![&mut self.0]
            }
            fn loss(&mut self) -> Result<f64> {
                Ok(self.0.value.data().iter().map(|x| x * x).sum())
            }
            fn loss_and_backward(&mut self) -> Result<f64> {
                // should be 2x
                let g = self.0.value.clone();
                self.0.grad.add_assign(&g)?;
                self.loss()
            }
        }
        let mut f = Broken(Parameter::new("p", Tensor::filled(&[2], 1.0)));
        let report = gradient_check(&mut f, FD_STEP).unwrap();
        assert!(report.max_rel_error > 0.4);
        assert_eq!(report.worst().unwrap().0, "p");
    }
}
