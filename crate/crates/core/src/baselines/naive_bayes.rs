use serde::{Deserialize, Serialize};

use super::argmax;
use crate::features::SparseVector;
use crate::{Error, Result};

/// Log prior given to classes without training documents, so that they are
/// never predicted while the model stays serializable.
pub const EMPTY_CLASS_LOG_PRIOR: f64 = f64::MIN;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaiveBayesModel {
    pub class_log_prior: Vec<f64>,
    /// `[class][token]` smoothed log-likelihoods.
    pub token_log_likelihood: Vec<Vec<f64>>,
    pub alpha: f64,
}

impl NaiveBayesModel {
    pub fn num_classes(&self) -> usize {
        self.class_log_prior.len()
    }

    pub fn dim(&self) -> usize {
        self.token_log_likelihood.first().map_or(0, Vec::len)
    }

    pub fn predict(&self, counts: &SparseVector) -> (usize, Vec<f64>) {
        nb_predict(self, counts)
    }
}

/// Multinomial Naive Bayes with additive smoothing:
/// `log P(c) = ln(N_c / N)` and
/// `log P(t|c) = ln((count(t, c) + alpha) / (total(c) + alpha * V))`.
pub fn nb_fit(train: &[(SparseVector, usize)], num_classes: usize, alpha: f64) -> Result<NaiveBayesModel> {
    if train.is_empty() {
        return Err(Error::invalid("Naive Bayes needs at least one training document"));
    }
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(format!("smoothing alpha must be positive, got {alpha}")));
    }
    let dim = train[0].0.dim();
    let mut doc_counts = vec![0usize; num_classes];
    let mut token_counts = vec![vec![0.0; dim]; num_classes];
    for (x, c) in train {
        if *c >= num_classes {
            return Err(Error::invalid(format!("class id {c} >= {num_classes}")));
        }
        if x.dim() != dim {
            return Err(Error::ShapeMismatch {
                op: "nb_fit",
                left: vec![dim],
                right: vec![x.dim()],
            });
        }
        doc_counts[*c] += 1;
        for (i, v) in x.iter() {
            if !(v.is_finite() && v >= 0.0) {
                return Err(Error::NonFinite(format!("term count {v} at index {i}")));
            }
            token_counts[*c][i] += v;
        }
    }
    let n = train.len() as f64;
    let class_log_prior = doc_counts
        .iter()
        .enumerate()
        .map(|(c, &k)| {
            if k == 0 {
                log::warn!("class {c} has no training documents; it will never be predicted");
                EMPTY_CLASS_LOG_PRIOR
            } else {
                (k as f64 / n).ln()
            }
        })
        .collect();
    let token_log_likelihood = token_counts
        .iter()
        .map(|row| {
            let total: f64 = row.iter().sum();
            let denom = (total + alpha * dim as f64).ln();
            row.iter().map(|&k| (k + alpha).ln() - denom).collect()
        })
        .collect();
    Ok(NaiveBayesModel {
        class_log_prior,
        token_log_likelihood,
        alpha,
    })
}

/// Scores `log P(c) + sum_t count(t) * log P(t|c)` for each class.
pub fn nb_predict(model: &NaiveBayesModel, counts: &SparseVector) -> (usize, Vec<f64>) {
    let scores: Vec<f64> = model
        .class_log_prior
        .iter()
        .zip(&model.token_log_likelihood)
        .map(|(&prior, ll)| prior + counts.iter().map(|(i, k)| k * ll[i]).sum::<f64>())
        .collect();
    (argmax(&scores), scores)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bag(dim: usize, ids: &[usize]) -> SparseVector {
        SparseVector::from_pairs(dim, ids.iter().map(|&i| (i, 1.0))).unwrap()
    }

    // vocabulary: 0 kernel, 1 crash, 2 button, 3 color
    fn two_doc_model() -> NaiveBayesModel {
        let train = vec![(bag(4, &[0, 1]), 0), (bag(4, &[2, 3]), 1)];
        nb_fit(&train, 2, 1.0).unwrap()
    }

    #[test]
    fn hand_computed_two_doc_model() {
        let m = two_doc_model();
        assert!((m.class_log_prior[0].exp() - 0.5).abs() < 1e-12);
        assert!((m.class_log_prior[1].exp() - 0.5).abs() < 1e-12);
        assert!((m.token_log_likelihood[0][0].exp() - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.token_log_likelihood[0][2].exp() - 1.0 / 6.0).abs() < 1e-12);
    }

    #[test]
    fn kernel_panic_goes_to_a() {
        let m = two_doc_model();
        // "panic" is out of vocabulary; only "kernel" (id 0) is counted.
        let (c, scores) = nb_predict(&m, &bag(4, &[0]));
        assert_eq!(c, 0);
        assert!((scores[0] - (0.5f64.ln() + (1.0f64 / 3.0).ln())).abs() < 1e-12);
        assert!((scores[1] - (0.5f64.ln() + (1.0f64 / 6.0).ln())).abs() < 1e-12);
    }

    #[test]
    fn empty_document_uses_priors() {
        let train = vec![(bag(3, &[0]), 1), (bag(3, &[1]), 1), (bag(3, &[2]), 0)];
        let m = nb_fit(&train, 2, 1.0).unwrap();
        let (c, scores) = nb_predict(&m, &SparseVector::empty(3));
        assert_eq!(c, 1);
        assert_eq!(scores, m.class_log_prior);
    }

    #[test]
    fn single_class_and_empty_class() {
        let train = vec![(bag(3, &[0]), 0), (bag(3, &[1]), 0)];
        let m = nb_fit(&train, 3, 1.0).unwrap();
        assert_eq!(m.class_log_prior[0], 0.0);
        assert_eq!(m.class_log_prior[1], EMPTY_CLASS_LOG_PRIOR);
        assert_eq!(nb_predict(&m, &bag(3, &[2])).0, 0);
        let total: f64 = m.class_log_prior.iter().map(|p| p.exp()).sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert!(serde_json::to_string(&m).is_ok());
    }

    #[test]
    fn large_alpha_flattens_likelihoods() {
        let train = vec![(bag(4, &[0, 1]), 0), (bag(4, &[2, 3]), 1)];
        let m = nb_fit(&train, 2, 1e9).unwrap();
        for row in &m.token_log_likelihood {
            for &l in row {
                assert!((l.exp() - 0.25).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn likelihoods_normalize_per_class() {
        let train = vec![
            (SparseVector::from_pairs(5, [(0, 3.0), (4, 1.0)]).unwrap(), 0),
            (SparseVector::from_pairs(5, [(1, 2.0)]).unwrap(), 1),
            (SparseVector::from_pairs(5, [(2, 7.0), (3, 1.0)]).unwrap(), 2),
        ];
        let m = nb_fit(&train, 3, 0.3).unwrap();
        for row in &m.token_log_likelihood {
            let s: f64 = row.iter().map(|l| l.exp()).sum();
            assert!((s - 1.0).abs() < 1e-6);
        }
    }

    #[test]
    fn argmax_invariant_to_shift() {
        let m = two_doc_model();
        let (c, scores) = nb_predict(&m, &bag(4, &[2, 0, 3]));
        let shifted: Vec<f64> = scores.iter().map(|s| s + 123.4).collect();
        assert_eq!(super::argmax(&shifted), c);
    }

    #[test]
    fn errors() {
        assert!(nb_fit(&[], 2, 1.0).is_err());
        assert!(nb_fit(&[(bag(2, &[0]), 0)], 2, 0.0).is_err());
        assert!(nb_fit(&[(bag(2, &[0]), 2)], 2, 1.0).is_err());
        assert!(nb_fit(&[(bag(2, &[0]), 0), (bag(3, &[0]), 1)], 2, 1.0).is_err());
    }
}
