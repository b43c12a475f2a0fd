//! Published reference scores for the six methods on the three public
//! bug-tracker tasks. Shown next to measured results in reports; never used
//! as a pass/fail target.

use serde::{Deserialize, Serialize};

use super::classifier::Method;

/// Reference accuracy and weighted F1, both as ratios.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReferenceScores {
    pub accuracy: f64,
    pub weighted_f1: f64,
}

/// Tasks with reference values, in column order: Arch Linux priority
/// (9 classes), Arch Linux product (16 classes), Chromium type (3 classes).
pub const REFERENCE_TASKS: [&str; 3] = ["archlinux:priority", "archlinux:product", "chromium:type"];

const ACCURACY: [[f64; 3]; 6] = [
    [0.516, 0.456, 0.805],
    [0.650, 0.616, 0.805],
    [0.642, 0.587, 0.822],
    [0.614, 0.638, 0.816],
    [0.664, 0.589, 0.759],
    [0.691, 0.587, 0.882],
];

const WEIGHTED_F1: [[f64; 3]; 6] = [
    [0.479, 0.411, 0.787],
    [0.568, 0.590, 0.804],
    [0.542, 0.579, 0.821],
    [0.516, 0.604, 0.816],
    [0.573, 0.574, 0.758],
    [0.579, 0.567, 0.879],
];

/// Reference scores for `method` on `task` (`dataset:field`, compared
/// case-insensitively), if published.
pub fn reference_scores(method: Method, task: &str) -> Option<ReferenceScores> {
    let row = Method::ALL.iter().position(|&m| m == method)?;
    let col = REFERENCE_TASKS.iter().position(|t| t.eq_ignore_ascii_case(task))?;
    Some(ReferenceScores {
        accuracy: ACCURACY[row][col],
        weighted_f1: WEIGHTED_F1[row][col],
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn proposed_method_row() {
        let acc: Vec<f64> = REFERENCE_TASKS.iter().map(|t| reference_scores(Method::Proposed, t).unwrap().accuracy).collect();
        assert_eq!(acc, [0.691, 0.587, 0.882]);
        let f1: Vec<f64> = REFERENCE_TASKS.iter().map(|t| reference_scores(Method::Proposed, t).unwrap().weighted_f1).collect();
        assert_eq!(f1, [0.579, 0.567, 0.879]);
    }

    #[test]
    fn lookups() {
        assert_eq!(reference_scores(Method::Nb, "ArchLinux:Priority").unwrap().accuracy, 0.516);
        assert_eq!(reference_scores(Method::Deeptriage, "archlinux:product").unwrap().weighted_f1, 0.604);
        assert!(reference_scores(Method::Svm, "synthetic:category").is_none());
    }
}
