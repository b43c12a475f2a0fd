use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Counts indexed `[true class][predicted class]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(num_classes: usize) -> Self {
        ConfusionMatrix {
            counts: vec![vec![0; num_classes]; num_classes],
        }
    }

    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self> {
        let c = counts.len();
        if counts.iter().any(|row| row.len() != c) {
            return Err(Error::invalid("confusion matrix must be square"));
        }
        Ok(ConfusionMatrix { counts })
    }

    pub fn from_predictions(num_classes: usize, truth: &[usize], predicted: &[usize]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(Error::ShapeMismatch {
                op: "confusion matrix",
                left: vec![truth.len()],
                right: vec![predicted.len()],
            });
        }
        let mut cm = ConfusionMatrix::new(num_classes);
        for (&t, &p) in truth.iter().zip(predicted) {
            cm.add(t, p)?;
        }
        Ok(cm)
    }

    pub fn add(&mut self, truth: usize, predicted: usize) -> Result<()> {
        let c = self.num_classes();
        if truth >= c || predicted >= c {
            return Err(Error::invalid(format!("class pair ({truth}, {predicted}) outside {c} classes")));
        }
        self.counts[truth][predicted] += 1;
        Ok(())
    }

    pub fn num_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn row_sum(&self, class: usize) -> u64 {
        self.counts[class].iter().sum()
    }

    pub fn col_sum(&self, class: usize) -> u64 {
        self.counts.iter().map(|row| row[class]).sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.num_classes()).map(|c| self.counts[c][c]).sum()
    }

    fn nonempty_total(&self) -> Result<f64> {
        match self.total() {
            0 => Err(Error::invalid("metrics of an empty confusion matrix")),
            n => Ok(n as f64),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub weighted_f1: f64,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

pub fn accuracy(cm: &ConfusionMatrix) -> Result<f64> {
    Ok(cm.trace() as f64 / cm.nonempty_total()?)
}

/// Per-class precision, recall and F1 with the `0/0 → 0` convention.
/// Classes are named by index unless `names` is given.
pub fn per_class_metrics(cm: &ConfusionMatrix, names: Option<&[String]>) -> Vec<ClassMetrics> {
    (0..cm.num_classes())
        .map(|c| {
            let precision = ratio(cm.get(c, c), cm.col_sum(c));
            let recall = ratio(cm.get(c, c), cm.row_sum(c));
            ClassMetrics {
                class: names.and_then(|n| n.get(c).cloned()).unwrap_or_else(|| c.to_string()),
                precision,
                recall,
                f1: f1(precision, recall),
                support: cm.row_sum(c),
            }
        })
        .collect()
}

/// Per-class F1 averaged with weights proportional to true-class support.
pub fn weighted_f1(cm: &ConfusionMatrix) -> Result<f64> {
    let total = cm.nonempty_total()?;
    Ok(per_class_metrics(cm, None)
        .iter()
        .map(|m| m.support as f64 / total * m.f1)
        .sum())
}

pub fn metrics(cm: &ConfusionMatrix, names: Option<&[String]>) -> Result<Metrics> {
    Ok(Metrics {
        accuracy: accuracy(cm)?,
        weighted_f1: weighted_f1(cm)?,
        per_class: per_class_metrics(cm, names),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cm(rows: &[&[u64]]) -> ConfusionMatrix {
        ConfusionMatrix::from_counts(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    #[test]
    fn accuracy_examples() {
        assert_eq!(accuracy(&cm(&[&[3, 0], &[0, 5]])).unwrap(), 1.0);
        assert_eq!(accuracy(&cm(&[&[1, 1], &[1, 1]])).unwrap(), 0.5);
        assert!(accuracy(&ConfusionMatrix::new(3)).is_err());
    }

    #[test]
    fn weighted_f1_examples() {
        assert_eq!(weighted_f1(&cm(&[&[4, 0, 0], &[0, 2, 0], &[0, 0, 1]])).unwrap(), 1.0);
        let w = weighted_f1(&cm(&[&[2, 0], &[1, 1]])).unwrap();
        assert!((w - (0.5 * 0.8 + 0.5 * 2.0 / 3.0)).abs() < 1e-15);
        assert!((w - 0.7333).abs() < 1e-4);
        // class 2 never true and never predicted
        let with_empty = weighted_f1(&cm(&[&[2, 0, 0], &[1, 1, 0], &[0, 0, 0]])).unwrap();
        assert_eq!(with_empty, w);
        assert!(weighted_f1(&ConfusionMatrix::new(2)).is_err());
    }

    #[test]
    fn constant_classifier_on_balanced_set() {
        // always predicting class 0 on 3 balanced classes:
        // class 0 has P = 1/3, R = 1, F1 = 1/2; the others score 0
        let m = cm(&[&[5, 0, 0], &[5, 0, 0], &[5, 0, 0]]);
        assert!((weighted_f1(&m).unwrap() - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn from_predictions_and_bounds() {
        let m = ConfusionMatrix::from_predictions(3, &[0, 1, 2, 2], &[0, 2, 2, 1]).unwrap();
        assert_eq!(m.get(1, 2), 1);
        assert_eq!(m.total(), 4);
        assert!(ConfusionMatrix::from_predictions(2, &[0, 2], &[0, 1]).is_err());
        assert!(ConfusionMatrix::from_counts(vec![vec![1, 2]]).is_err());
        let names = vec!["a".to_string(), "b".into(), "c".into()];
        let per = per_class_metrics(&m, Some(&names));
        assert_eq!(per[2].class, "c");
        assert_eq!(per.iter().map(|c| c.support).sum::<u64>(), 4);
    }
}
