//! Accuracy and confusion matrices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

fn check(actual: &[usize], predicted: &[usize]) -> Result<()> {
    if actual.is_empty() {
        return Err(Error::EmptyInput);
    }
    if actual.len() != predicted.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} actual labels but {} predictions",
            actual.len(),
            predicted.len()
        )));
    }
    Ok(())
}

/// Per-class accuracy weighted by class frequency in `actual`.
///
/// `Σ_c (n_c/N)(correct_c/n_c)` collapses to `correct/N`, which is how it is
/// computed so that the result is exactly the plain fraction correct.
pub fn weighted_accuracy(actual: &[usize], predicted: &[usize]) -> Result<f64> {
    check(actual, predicted)?;
    let correct = actual.iter().zip(predicted).filter(|(a, p)| a == p).count();
    Ok(correct as f64 / actual.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    /// `counts[actual][predicted]`
    pub counts: Vec<Vec<usize>>,
    /// Each row divided by its total; all zero for an empty row.
    pub rows: Vec<Vec<f64>>,
    /// Actual classes with no examples.
    pub empty_rows: Vec<usize>,
}

pub fn confusion_matrix(actual: &[usize], predicted: &[usize], n_classes: usize) -> Result<ConfusionMatrix> {
    if actual.len() != predicted.len() {
        return Err(Error::ShapeMismatch("label vectors differ in length".into()));
    }
    let mut counts = vec![vec![0usize; n_classes]; n_classes];
    for (&a, &p) in actual.iter().zip(predicted) {
        if a >= n_classes || p >= n_classes {
            return Err(Error::ShapeMismatch(format!("label outside 0..{n_classes}")));
        }
        counts[a][p] += 1;
    }
    let mut empty_rows = Vec::new();
    let rows = counts
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let total: usize = r.iter().sum();
            if total == 0 {
                empty_rows.push(i);
                vec![0.0; n_classes]
            } else {
                r.iter().map(|&c| c as f64 / total as f64).collect()
            }
        })
        .collect();
    Ok(ConfusionMatrix {
        counts,
        rows,
        empty_rows,
    })
}

/// Most frequent label, lowest on ties.
pub fn majority_class(labels: &[usize]) -> Option<usize> {
    let max = *labels.iter().max()?;
    let mut counts = vec![0usize; max + 1];
    labels.iter().for_each(|&l| counts[l] += 1);
    let top = *counts.iter().max()?;
    counts.iter().position(|&c| c == top)
}

/// Accuracy on `test` of always predicting the majority class of `train`.
pub fn majority_baseline(train: &[usize], test: &[usize]) -> Result<f64> {
    let m = majority_class(train).ok_or(Error::EmptyInput)?;
    weighted_accuracy(test, &vec![m; test.len()])
}

/// Mean and sample standard deviation (0 for a single value).
pub fn mean_std(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0);
    (mean, var.sqrt())
}
