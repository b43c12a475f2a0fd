use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::SparseVector;
use crate::rng::Rng;
use crate::{Error, Result};

/// One-vs-rest linear SVM. The bias is learned as the weight of a constant
/// feature 1 and is therefore regularized together with the weights.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvmModel {
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
    pub lambda: f64,
    pub epochs: usize,
}

impl LinearSvmModel {
    pub fn num_classes(&self) -> usize {
        self.weights.len()
    }

    pub fn dim(&self) -> usize {
        self.weights.first().map_or(0, Vec::len)
    }

    pub fn decision(&self, class: usize, x: &SparseVector) -> f64 {
        x.dot_dense(&self.weights[class]) + self.bias[class]
    }

    pub fn predict(&self, x: &SparseVector) -> Result<(usize, Vec<f64>)> {
        svm_predict(self, x)
    }
}

/// Weight vector `scale * v` with the bias stored as the last entry of `v`,
/// so that the Pegasos shrink step is O(1).
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    sq_norm_v: f64,
}

impl ScaledWeights {
    fn new(dim: usize) -> Self {
        ScaledWeights {
            v: vec![0.0; dim + 1],
            scale: 1.0,
            sq_norm_v: 0.0,
        }
    }

    fn dot_v(&self, x: &SparseVector) -> f64 {
        x.dot_dense(&self.v) + self.v[self.v.len() - 1]
    }

    fn shrink(&mut self, factor: f64) {
        self.scale *= factor;
        if self.scale == 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            self.sq_norm_v = 0.0;
        } else if self.scale < 1e-9 {
            let s = self.scale;
            self.v.iter_mut().for_each(|w| *w *= s);
            self.sq_norm_v *= s * s;
            self.scale = 1.0;
        }
    }

    /// `w += coef * [x, 1]`, given `dot_v = v . [x, 1]` before the update.
    fn add(&mut self, coef: f64, x: &SparseVector, dot_v: f64) {
        let a = coef / self.scale;
        let x_sq = x.values().iter().map(|v| v * v).sum::<f64>() + 1.0;
        for (i, xi) in x.iter() {
            self.v[i] += a * xi;
        }
        let last = self.v.len() - 1;
        self.v[last] += a;
        self.sq_norm_v += 2.0 * a * dot_v + a * a * x_sq;
    }

    fn norm(&self) -> f64 {
        self.scale * self.sq_norm_v.max(0.0).sqrt()
    }
}

fn validate(train: &[(SparseVector, usize)], num_classes: usize, lambda: f64) -> Result<usize> {
    if train.is_empty() {
        return Err(Error::invalid("SVM needs at least one training example"));
    }
    if !(lambda > 0.0 && lambda.is_finite()) {
        return Err(Error::invalid(format!("lambda must be positive, got {lambda}")));
    }
    let dim = train[0].0.dim();
    for (x, c) in train {
        if *c >= num_classes {
            return Err(Error::invalid(format!("class id {c} >= {num_classes}")));
        }
        if x.dim() != dim {
            return Err(Error::ShapeMismatch {
                op: "svm_fit",
                left: vec![dim],
                right: vec![x.dim()],
            });
        }
        if let Some(v) = x.values().iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("SVM feature value {v}")));
        }
    }
    Ok(dim)
}

/// Primal objective `lambda/2 |w|^2 + mean hinge` of the binary problem
/// "class vs rest" (bias included in `w`).
pub fn svm_objective(model: &LinearSvmModel, train: &[(SparseVector, usize)], class: usize) -> f64 {
    let w = &model.weights[class];
    let b = model.bias[class];
    let sq: f64 = w.iter().map(|x| x * x).sum::<f64>() + b * b;
    let hinge: f64 = train
        .iter()
        .map(|(x, c)| {
            let y = if *c == class { 1.0 } else { -1.0 };
            (1.0 - y * (x.dot_dense(w) + b)).max(0.0)
        })
        .sum::<f64>()
        / train.len() as f64;
    0.5 * model.lambda * sq + hinge
}

/// Fits the SVM and also returns, per epoch, the primal objective of the
/// averaged iterate, averaged over the one-vs-rest problems.
pub fn svm_fit_with_history(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<(LinearSvmModel, Vec<f64>)> {
    let dim = validate(train, num_classes, lambda)?;
    let radius = 1.0 / lambda.sqrt();
    let mut history = vec![0.0; epochs];
    let mut weights = Vec::with_capacity(num_classes);
    let mut bias = Vec::with_capacity(num_classes);

    for class in 0..num_classes {
        let mut rng = Rng::derive(seed, class as u64);
        let mut w = ScaledWeights::new(dim);
        let mut order: Vec<usize> = (0..train.len()).collect();
        let mut t = 0u64;
        let mut avg = vec![0.0; dim + 1];
        for epoch in 0..epochs {
            rng.shuffle(&mut order);
            for &i in &order {
                t += 1;
                let (x, c) = &train[i];
                let y = if *c == class { 1.0 } else { -1.0 };
                let eta = 1.0 / (lambda * t as f64);
                let margin = y * w.scale * w.dot_v(x);
                w.shrink(1.0 - eta * lambda);
                if margin < 1.0 {
                    // shrink may have reset or rescaled v
                    let dot_v = w.dot_v(x);
                    w.add(eta * y, x, dot_v);
                }
                let norm = w.norm();
                if norm > radius {
                    w.shrink(radius / norm);
                }
            }
            // running mean of the end-of-epoch iterates
            let k = (epoch + 1) as f64;
            for (a, v) in avg.iter_mut().zip(&w.v) {
                *a += (v * w.scale - *a) / k;
            }
            let (wv, b) = avg.split_at(dim);
            let b = b[0];
            let hinge: f64 = train
                .iter()
                .map(|(x, c)| {
                    let y = if *c == class { 1.0 } else { -1.0 };
                    (1.0 - y * (x.dot_dense(wv) + b)).max(0.0)
                })
                .sum::<f64>()
                / train.len() as f64;
            let sq: f64 = avg.iter().map(|x| x * x).sum();
            history[epoch] += (0.5 * lambda * sq + hinge) / num_classes as f64;
        }
        let b = avg.pop().expect("bias slot");
        let wv = avg;
        if wv.iter().any(|x| !x.is_finite()) || !b.is_finite() {
            return Err(Error::NonFinite(format!("SVM weights for class {class}")));
        }
        weights.push(wv);
        bias.push(b);
    }
    Ok((
        LinearSvmModel {
            weights,
            bias,
            lambda,
            epochs,
        },
        history,
    ))
}

/// Pegasos stochastic subgradient descent (step `1 / (lambda t)`, projection
/// onto the ball of radius `1/sqrt(lambda)`), one binary problem per class.
/// The returned weights are the mean of the end-of-epoch iterates.
pub fn svm_fit(
    train: &[(SparseVector, usize)],
    num_classes: usize,
    lambda: f64,
    epochs: usize,
    seed: u64,
) -> Result<LinearSvmModel> {
    svm_fit_with_history(train, num_classes, lambda, epochs, seed).map(|(m, _)| m)
}

pub fn svm_predict(model: &LinearSvmModel, x: &SparseVector) -> Result<(usize, Vec<f64>)> {
    if x.dim() != model.dim() {
        return Err(Error::ShapeMismatch {
            op: "svm_predict",
            left: vec![model.dim()],
            right: vec![x.dim()],
        });
    }
    let scores: Vec<f64> = (0..model.num_classes())
        .map(|c| model.decision(c, x))
        .collect();
    Ok((argmax(&scores), scores))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{fit_tfidf, TfidfModel};
    use crate::preprocess::{ProcessedDocument, Vocabulary};

    /// 40 documents over two disjoint keyword vocabularies, TF-IDF encoded.
    fn separable() -> (Vec<(SparseVector, usize)>, TfidfModel) {
        let a = ["kernel", "driver", "panic", "module", "firmware"];
        let b = ["button", "color", "font", "theme", "window"];
        let mut docs = Vec::new();
        let mut labels = Vec::new();
        for i in 0..40 {
            let (words, label) = if i % 2 == 0 { (&a, 0) } else { (&b, 1) };
            let toks: Vec<String> = (0..4).map(|k| words[(i / 2 + k * (i % 3 + 1)) % 5].to_string()).collect();
            docs.push(ProcessedDocument { doc_id: format!("{i}"), sentences: vec![toks] });
            labels.push(label);
        }
        let vocab = Vocabulary::from_tokens(a.iter().chain(b.iter()).copied());
        let model = fit_tfidf(&docs, &vocab).unwrap();
        let data = docs.iter().zip(labels).map(|(d, l)| (model.transform(d), l)).collect();
        (data, model)
    }

    fn accuracy(m: &LinearSvmModel, data: &[(SparseVector, usize)]) -> f64 {
        let hits = data.iter().filter(|(x, c)| svm_predict(m, x).unwrap().0 == *c).count();
        hits as f64 / data.len() as f64
    }

    #[test]
    fn separable_toy_set() {
        let (data, _) = separable();
        let m = svm_fit(&data, 2, 1e-2, 20, 1).unwrap();
        assert_eq!(accuracy(&m, &data), 1.0);
        // held-out half: fit on even positions, score the odd ones
        let (train, test): (Vec<_>, Vec<_>) = data.iter().cloned().enumerate().partition(|(i, _)| (i / 2) % 2 == 0);
        let train: Vec<_> = train.into_iter().map(|(_, x)| x).collect();
        let test: Vec<_> = test.into_iter().map(|(_, x)| x).collect();
        let m = svm_fit(&train, 2, 1e-2, 20, 1).unwrap();
        assert!(accuracy(&m, &test) >= 0.95);
    }

    #[test]
    fn deterministic_for_seed() {
        let (data, _) = separable();
        let a = svm_fit(&data, 2, 1e-3, 5, 9).unwrap();
        let b = svm_fit(&data, 2, 1e-3, 5, 9).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn single_example() {
        let x = SparseVector::from_pairs(3, [(1, 1.0)]).unwrap();
        let m = svm_fit(&[(x.clone(), 1)], 2, 0.1, 3, 0).unwrap();
        assert_eq!(svm_predict(&m, &x).unwrap().0, 1);
    }

    #[test]
    fn objective_settles() {
        let (data, _) = separable();
        let (_, history) = svm_fit_with_history(&data, 2, 1e-2, 40, 3).unwrap();
        for e in 0..history.len() - 5 {
            assert!(
                history[e + 5] <= history[e] + 1e-3,
                "epoch {}: {} > {}",
                e + 5,
                history[e + 5],
                history[e]
            );
        }
        let m = svm_fit(&data, 2, 1e-2, 40, 3).unwrap();
        let avg = (svm_objective(&m, &data, 0) + svm_objective(&m, &data, 1)) / 2.0;
        assert!((avg - history[39]).abs() < 1e-9);
    }

    #[test]
    fn zero_vector_uses_bias_and_scaling_keeps_argmax() {
        let m = LinearSvmModel {
            weights: vec![vec![1.0, -2.0], vec![0.5, 0.5], vec![-1.0, 3.0]],
            bias: vec![0.1, 0.3, -0.2],
            lambda: 1.0,
            epochs: 1,
        };
        assert_eq!(svm_predict(&m, &SparseVector::empty(2)).unwrap().0, 1);
        let unbiased = LinearSvmModel { bias: vec![0.0; 3], ..m.clone() };
        let x = SparseVector::from_pairs(2, [(0, 0.2), (1, 0.7)]).unwrap();
        let c = svm_predict(&unbiased, &x).unwrap().0;
        for k in [0.01, 3.0, 1e4] {
            let mut y = x.clone();
            y.scale(k);
            assert_eq!(svm_predict(&unbiased, &y).unwrap().0, c);
        }
        assert!(svm_predict(&m, &SparseVector::empty(5)).is_err());
    }

    #[test]
    fn rejects_bad_input() {
        let nan = SparseVector::from_pairs(2, [(0, f64::NAN)]).unwrap();
        assert!(matches!(svm_fit(&[(nan, 0)], 2, 0.1, 1, 0), Err(Error::NonFinite(_))));
        let x = SparseVector::from_pairs(2, [(0, 1.0)]).unwrap();
        assert!(svm_fit(&[(x.clone(), 0)], 2, 0.0, 1, 0).is_err());
        assert!(svm_fit(&[], 2, 0.1, 1, 0).is_err());
    }
}
