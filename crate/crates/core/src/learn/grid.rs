//! Grid search over boosting hyperparameters with stratified k-fold
//! cross-validation.
//!
//! Each class's rows are shuffled with the stream `(seed, class)` and dealt
//! round-robin over the folds, continuing from where the previous class
//! stopped, so fold sizes differ by at most one. Classes with fewer members
//! than folds are dealt the same way and reported in
//! [`GridResult::small_classes`].
//!
//! For each (fold, learning rate) a single model with the largest estimator
//! count is trained; smaller counts are scored on its stage prefixes, which
//! is exactly the model a shorter run would have produced.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::gbt::{fit_gbt_or_prior, DEFAULT_MAX_DEPTH};
use super::tree::check_xy;
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HyperGrid {
    pub learning_rates: Vec<f64>,
    pub n_estimators_options: Vec<usize>,
    pub cv_folds: usize,
}

impl Default for HyperGrid {
    /// 6 learning rates × 7 estimator counts, 3 folds.
    fn default() -> Self {
        HyperGrid {
            learning_rates: vec![0.15, 0.1, 0.05, 0.01, 0.005, 0.001],
            n_estimators_options: vec![10, 15, 20, 25, 30, 35, 40],
            cv_folds: 3,
        }
    }
}

impl HyperGrid {
    pub fn single(learning_rate: f64, n_estimators: usize) -> Self {
        HyperGrid {
            learning_rates: vec![learning_rate],
            n_estimators_options: vec![n_estimators],
            cv_folds: 3,
        }
    }

    pub fn n_cells(&self) -> usize {
        self.learning_rates.len() * self.n_estimators_options.len()
    }

    pub fn validate(&self) -> Result<()> {
        if self.learning_rates.is_empty() || self.n_estimators_options.is_empty() {
            return Err(Error::InvalidHyperparameter("grid lists must be non-empty".into()));
        }
        if let Some(r) = self.learning_rates.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
            return Err(Error::InvalidHyperparameter(format!("learning rate {r} must be > 0")));
        }
        if self.n_estimators_options.contains(&0) {
            return Err(Error::InvalidHyperparameter("estimator counts must be >= 1".into()));
        }
        if self.cv_folds < 2 {
            return Err(Error::InvalidHyperparameter("at least two folds are required".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridCell {
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub mean_accuracy: f64,
    pub fold_accuracies: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridResult {
    pub best_learning_rate: f64,
    pub best_n_estimators: usize,
    pub best_accuracy: f64,
    /// Rates in grid order, estimator counts in grid order within a rate.
    pub cells: Vec<GridCell>,
    /// Class codes with fewer members than folds.
    pub small_classes: Vec<usize>,
    pub fold_sizes: Vec<usize>,
}

/// Fold index of every row.
pub fn stratified_folds(y: &[usize], folds: usize, seed: u64) -> Vec<usize> {
    let mut by_class = std::collections::BTreeMap::<usize, Vec<usize>>::new();
    for (i, &c) in y.iter().enumerate() {
        by_class.entry(c).or_default().push(i);
    }
    let mut out = vec![0; y.len()];
    let mut next = 0;
    for (c, mut rows) in by_class {
        rows.shuffle(&mut rng::stream(seed, c as u64));
        for r in rows {
            out[r] = next;
            next = (next + 1) % folds;
        }
    }
    out
}

pub fn grid_search(x: &[Vec<f64>], y: &[usize], grid: &HyperGrid, seed: u64) -> Result<GridResult> {
    grid.validate()?;
    check_xy(x, y.len())?;
    let k = grid.cv_folds;
    if x.len() < k {
        return Err(Error::TooFewSamples(format!("{} rows for {k} folds", x.len())));
    }
    let fold_of = stratified_folds(y, k, seed);
    let mut fold_sizes = vec![0; k];
    fold_of.iter().for_each(|&f| fold_sizes[f] += 1);
    let small_classes: Vec<usize> = {
        let mut counts = std::collections::BTreeMap::<usize, usize>::new();
        y.iter().for_each(|&c| *counts.entry(c).or_default() += 1);
        counts.into_iter().filter(|&(_, n)| n < k).map(|(c, _)| c).collect()
    };
    let max_est = *grid.n_estimators_options.iter().max().expect("validated");

    let jobs: Vec<(usize, usize)> = (0..k)
        .flat_map(|f| (0..grid.learning_rates.len()).map(move |r| (f, r)))
        .collect();
    // accuracy[(fold, rate)][stage count]
    let staged: Vec<Vec<f64>> = jobs
        .par_iter()
        .map(|&(fold, r)| -> Result<Vec<f64>> {
            let (mut tx, mut ty, mut vx, mut vy) = (vec![], vec![], vec![], vec![]);
            for i in 0..x.len() {
                if fold_of[i] == fold {
                    vx.push(x[i].clone());
                    vy.push(y[i]);
                } else {
                    tx.push(x[i].clone());
                    ty.push(y[i]);
                }
            }
            let model = fit_gbt_or_prior(&tx, &ty, grid.learning_rates[r], max_est, DEFAULT_MAX_DEPTH)?;
            let mut correct = vec![0usize; max_est + 1];
            for (row, &truth) in vx.iter().zip(&vy) {
                let labels = model.staged_labels(row)?;
                for (m, c) in correct.iter_mut().enumerate() {
                    // A prior-only model has a single "stage".
                    *c += (labels[m.min(labels.len() - 1)] == truth) as usize;
                }
            }
            Ok(correct.into_iter().map(|c| c as f64 / vy.len() as f64).collect())
        })
        .collect::<Result<_>>()?;

    let mut cells = Vec::with_capacity(grid.n_cells());
    for (r, &rate) in grid.learning_rates.iter().enumerate() {
        for &n_est in &grid.n_estimators_options {
            let fold_accuracies: Vec<f64> = (0..k).map(|f| staged[f * grid.learning_rates.len() + r][n_est]).collect();
            let mean_accuracy = fold_accuracies.iter().sum::<f64>() / k as f64;
            cells.push(GridCell {
                learning_rate: rate,
                n_estimators: n_est,
                mean_accuracy,
                fold_accuracies,
            });
        }
    }
    let best = cells
        .iter()
        .min_by(|a, b| {
            b.mean_accuracy
                .total_cmp(&a.mean_accuracy)
                .then(a.learning_rate.total_cmp(&b.learning_rate))
                .then(a.n_estimators.cmp(&b.n_estimators))
        })
        .expect("non-empty grid");
    Ok(GridResult {
        best_learning_rate: best.learning_rate,
        best_n_estimators: best.n_estimators,
        best_accuracy: best.mean_accuracy,
        small_classes,
        fold_sizes,
        cells,
    })
}
