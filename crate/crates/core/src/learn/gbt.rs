//! Multiclass gradient-boosted trees on the multinomial deviance.
//!
//! Scores start at the log class priors. Every stage computes the softmax
//! probabilities `p` once, then for each class `k` fits a regression tree to
//! the residual `1{y = k} − p_k` and replaces its leaf values with the Newton
//! step
//!
//! ```text
//! (K − 1)/K · Σ r / max(Σ |r|(1 − |r|), 1e-12)
//! ```
//!
//! The tree's output, scaled by the learning rate, is added to the class
//! score. Only the classes present in the training labels are modelled.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::tree::{argmax, check_xy, grow_regressor, Binned, DecisionTree, Node, TreeParams};
use crate::error::{Error, Result};

pub const GBT_FORMAT_VERSION: u32 = 1;
pub const DEFAULT_MAX_DEPTH: usize = 3;
const NEWTON_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub format_version: u32,
    /// Label codes, ascending; output position `i` refers to `classes[i]`.
    pub classes: Vec<usize>,
    pub n_features: usize,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub max_depth: usize,
    pub priors: Vec<f64>,
    pub initial_scores: Vec<f64>,
    /// `stages[m][k]` is the tree for class position `k` at stage `m`.
    pub stages: Vec<Vec<DecisionTree>>,
    /// Mean training deviance before any stage and after each one.
    pub train_deviance: Vec<f64>,
}

/// Softmax with the maximum subtracted first.
pub fn softmax(scores: &[f64]) -> Vec<f64> {
    let m = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
    let z: f64 = e.iter().sum();
    e.into_iter().map(|v| v / z).collect()
}

impl GbtModel {
    /// A model with no stages that predicts the given class priors.
    pub fn prior_only(classes: Vec<usize>, priors: Vec<f64>, n_features: usize) -> Result<Self> {
        if classes.is_empty() || classes.len() != priors.len() {
            return Err(Error::ShapeMismatch("one prior per class is required".into()));
        }
        if priors.iter().any(|p| !(*p > 0.0)) {
            return Err(Error::InvalidHyperparameter("priors must be positive".into()));
        }
        Ok(GbtModel {
            format_version: GBT_FORMAT_VERSION,
            initial_scores: priors.iter().map(|p| p.ln()).collect(),
            classes,
            n_features,
            learning_rate: 1.0,
            n_estimators: 0,
            max_depth: DEFAULT_MAX_DEPTH,
            priors,
            stages: Vec::new(),
            train_deviance: Vec::new(),
        })
    }

    pub fn is_prior_only(&self) -> bool {
        self.stages.is_empty()
    }

    /// Raw class scores using the first `n_stages` stages.
    pub fn scores_at(&self, x: &[f64], n_stages: usize) -> Result<Vec<f64>> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut f = self.initial_scores.clone();
        for stage in self.stages.iter().take(n_stages) {
            for (s, t) in f.iter_mut().zip(stage) {
                *s += self.learning_rate * t.predict_value(x)?;
            }
        }
        Ok(f)
    }

    /// Distribution over `classes` and the predicted label code.
    pub fn predict(&self, x: &[f64]) -> Result<(Vec<f64>, usize)> {
        self.predict_at(x, self.stages.len())
    }

    pub fn predict_at(&self, x: &[f64], n_stages: usize) -> Result<(Vec<f64>, usize)> {
        let p = softmax(&self.scores_at(x, n_stages)?);
        let label = self.classes[argmax(&p)];
        Ok((p, label))
    }

    /// Predicted label after 0, 1, ..., `n_estimators` stages.
    pub fn staged_labels(&self, x: &[f64]) -> Result<Vec<usize>> {
        let mut f = self.scores_at(x, 0)?;
        let mut out = Vec::with_capacity(self.stages.len() + 1);
        out.push(self.classes[argmax(&f)]);
        for stage in &self.stages {
            for (s, t) in f.iter_mut().zip(stage) {
                *s += self.learning_rate * t.predict_value(x)?;
            }
            out.push(self.classes[argmax(&f)]);
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: GbtModel = serde_json::from_str(s)?;
        if m.format_version != GBT_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "boosted model".into(),
                found: m.format_version,
                expected: GBT_FORMAT_VERSION,
            });
        }
        Ok(m)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?)
    }
}

/// Distribution and label for one feature vector.
pub fn predict_gbt(model: &GbtModel, x: &[f64]) -> Result<(Vec<f64>, usize)> {
    model.predict(x)
}

pub fn fit_gbt(
    x: &[Vec<f64>],
    y: &[usize],
    learning_rate: f64,
    n_estimators: usize,
    max_depth: usize,
) -> Result<GbtModel> {
    if !(learning_rate > 0.0) || !learning_rate.is_finite() {
        return Err(Error::InvalidHyperparameter(format!("learning rate {learning_rate} must be > 0")));
    }
    if n_estimators < 1 {
        return Err(Error::InvalidHyperparameter("at least one estimator is required".into()));
    }
    check_xy(x, y.len())?;
    let (classes, priors) = class_priors(y);
    if classes.len() < 2 {
        return Err(Error::TooFewSamples("boosting needs at least two classes".into()));
    }
    let binned = Binned::new(x)?;
    Ok(boost(&binned, x, y, classes, priors, learning_rate, n_estimators, max_depth))
}

/// Like [`fit_gbt`], but returns a prior-only model when `y` has a single
/// class.
pub fn fit_gbt_or_prior(
    x: &[Vec<f64>],
    y: &[usize],
    learning_rate: f64,
    n_estimators: usize,
    max_depth: usize,
) -> Result<GbtModel> {
    let d = check_xy(x, y.len())?;
    let (classes, priors) = class_priors(y);
    if classes.len() < 2 {
        return GbtModel::prior_only(classes, priors, d);
    }
    fit_gbt(x, y, learning_rate, n_estimators, max_depth)
}

/// Classes present in `y` (ascending) and their relative frequencies.
pub fn class_priors(y: &[usize]) -> (Vec<usize>, Vec<f64>) {
    let mut counts = std::collections::BTreeMap::new();
    for &c in y {
        *counts.entry(c).or_insert(0usize) += 1;
    }
    let n = y.len() as f64;
    counts.into_iter().map(|(c, k)| (c, k as f64 / n)).unzip()
}

#[allow(clippy::too_many_arguments)]
fn boost(
    binned: &Binned,
    x: &[Vec<f64>],
    y: &[usize],
    classes: Vec<usize>,
    priors: Vec<f64>,
    learning_rate: f64,
    n_estimators: usize,
    max_depth: usize,
) -> GbtModel {
    let n = x.len();
    let k = classes.len();
    let pos: Vec<usize> = y
        .iter()
        .map(|c| classes.binary_search(c).expect("class present"))
        .collect();
    let initial_scores: Vec<f64> = priors.iter().map(|p| p.ln()).collect();
    let mut f: Vec<Vec<f64>> = vec![initial_scores.clone(); n];
    let deviance = |f: &[Vec<f64>]| -> f64 {
        f.iter().zip(&pos).map(|(s, &c)| -softmax(s)[c].ln()).sum::<f64>() / n as f64
    };
    let mut train_deviance = vec![deviance(&f)];
    let params = TreeParams::with_depth(max_depth);
    let rows: Vec<usize> = (0..n).collect();
    let factor = (k as f64 - 1.0) / k as f64;
    let mut stages = Vec::with_capacity(n_estimators);
    for _ in 0..n_estimators {
        let p: Vec<Vec<f64>> = f.iter().map(|s| softmax(s)).collect();
        let mut stage = Vec::with_capacity(k);
        for c in 0..k {
            let r: Vec<f64> = (0..n).map(|i| (pos[i] == c) as u8 as f64 - p[i][c]).collect();
            let newton = |leaf: &[usize]| {
                let num: f64 = leaf.iter().map(|&i| r[i]).sum();
                let den: f64 = leaf.iter().map(|&i| r[i].abs() * (1.0 - r[i].abs())).sum();
                factor * num / den.max(NEWTON_FLOOR)
            };
            let tree = grow_regressor(binned, &r, &rows, &params, &newton);
            for (i, row) in x.iter().enumerate() {
                f[i][c] += learning_rate * tree.predict_value(row).expect("training row width");
            }
            stage.push(tree);
        }
        stages.push(stage);
        train_deviance.push(deviance(&f));
    }
    GbtModel {
        format_version: GBT_FORMAT_VERSION,
        classes,
        n_features: binned.n_features,
        learning_rate,
        n_estimators,
        max_depth,
        priors,
        initial_scores,
        stages,
        train_deviance,
    }
}

/// Number of leaves across every tree of the model.
pub fn leaf_count(model: &GbtModel) -> usize {
    fn leaves(n: &Node) -> usize {
        match n {
            Node::Leaf { .. } => 1,
            Node::Split { left, right, .. } => leaves(left) + leaves(right),
        }
    }
    model.stages.iter().flatten().map(|t| leaves(&t.root)).sum()
}
