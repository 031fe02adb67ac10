//! Per-pattern training and evaluation.

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::features::EncodedMatrix;
use super::metrics::{confusion_matrix, majority_baseline, weighted_accuracy, ConfusionMatrix};
use crate::dataset::{label_histogram, Fraction, LabelHistogram, LabelSet, Pattern, SplitIndices};
use crate::error::{Error, Result};
use crate::learn::{
    class_priors, feature_importances, fit_gbt, fit_random_forest, grid_search, GbtModel, HyperGrid,
    DEFAULT_MAX_DEPTH,
};

pub const MODEL_FORMAT_VERSION: u32 = 1;
pub const REPORT_FORMAT_VERSION: u32 = 1;
pub const N_CLASSES: usize = 3;

/// Published per-pattern test accuracies, in [`Pattern::ALL`] order.
pub const PUBLISHED_ACCURACY: [f64; 5] = [0.720, 0.500, 0.686, 0.570, 0.628];

/// Hex SHA-256 of a split's size, fraction, seed and training indices.
pub fn split_digest(split: &SplitIndices) -> String {
    let mut h = Sha256::new();
    h.update(format!("{}|{}|{}|", split.n(), split.train_fraction, split.seed));
    for id in &split.train_ids {
        h.update(format!("{id},"));
    }
    hex::encode(h.finalize())
}

/// A trained model for one pattern plus what is needed to check it against
/// a split later.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternModel {
    pub format_version: u32,
    pub pattern: Pattern,
    pub seed: u64,
    pub split_digest: String,
    pub learning_rate: f64,
    pub n_estimators: usize,
    /// Best mean cross-validation accuracy; `None` for a prior-only model.
    pub cv_accuracy: Option<f64>,
    /// Classes with fewer training members than folds.
    pub small_classes: Vec<usize>,
    /// Training rows held a single class, so the model predicts it always.
    pub degenerate: bool,
    pub model: GbtModel,
}

impl PatternModel {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        let m: PatternModel = serde_json::from_str(s)?;
        if m.format_version != MODEL_FORMAT_VERSION {
            return Err(Error::FormatVersion {
                what: "pattern model".into(),
                found: m.format_version,
                expected: MODEL_FORMAT_VERSION,
            });
        }
        // Re-validates the nested model's version too.
        GbtModel::from_json(&serde_json::to_string(&m.model)?)?;
        Ok(m)
    }

    pub fn predict_rows(&self, rows: &[Vec<f64>]) -> Result<Vec<usize>> {
        rows.iter().map(|r| self.model.predict(r).map(|p| p.1)).collect()
    }
}

fn check_alignment(matrix: &EncodedMatrix, labels: &[LabelSet], split: &SplitIndices) -> Result<()> {
    if matrix.rows.len() != labels.len() {
        return Err(Error::ShapeMismatch(format!(
            "{} encoded rows but {} label sets",
            matrix.rows.len(),
            labels.len()
        )));
    }
    if split.n() != labels.len() {
        return Err(Error::SplitMismatch(format!(
            "split covers {} records but {} are present",
            split.n(),
            labels.len()
        )));
    }
    Ok(())
}

fn codes(labels: &[LabelSet], ids: &[usize], pattern: Pattern) -> Vec<usize> {
    ids.iter().map(|&i| labels[i].get(pattern) as usize).collect()
}

/// Grid search on the training rows, then a refit of the best cell on all
/// training rows. Single-class training rows give a prior-only model.
pub fn train_pattern(
    matrix: &EncodedMatrix,
    labels: &[LabelSet],
    split: &SplitIndices,
    grid: &HyperGrid,
    seed: u64,
    pattern: Pattern,
) -> Result<PatternModel> {
    check_alignment(matrix, labels, split)?;
    grid.validate()?;
    let x = matrix.select(&split.train_ids);
    let y = codes(labels, &split.train_ids, pattern);
    let (classes, priors) = class_priors(&y);
    let base = |model: GbtModel| PatternModel {
        format_version: MODEL_FORMAT_VERSION,
        pattern,
        seed,
        split_digest: split_digest(split),
        learning_rate: model.learning_rate,
        n_estimators: model.n_estimators,
        cv_accuracy: None,
        small_classes: Vec::new(),
        degenerate: model.is_prior_only(),
        model,
    };
    if classes.len() < 2 {
        return Ok(base(GbtModel::prior_only(classes, priors, matrix.n_columns())?));
    }
    let search = grid_search(&x, &y, grid, seed)?;
    let model = fit_gbt(&x, &y, search.best_learning_rate, search.best_n_estimators, DEFAULT_MAX_DEPTH)?;
    Ok(PatternModel {
        cv_accuracy: Some(search.best_accuracy),
        small_classes: search.small_classes,
        ..base(model)
    })
}

/// One model per pattern, in [`Pattern::ALL`] order.
pub fn train_all(
    matrix: &EncodedMatrix,
    labels: &[LabelSet],
    split: &SplitIndices,
    grid: &HyperGrid,
    seed: u64,
) -> Result<Vec<PatternModel>> {
    Pattern::ALL
        .iter()
        .map(|&p| train_pattern(matrix, labels, split, grid, seed, p))
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternReport {
    pub pattern: Pattern,
    pub name: String,
    pub weighted_accuracy: f64,
    pub majority_baseline: f64,
    pub published_accuracy: f64,
    pub confusion: ConfusionMatrix,
    pub train_class_counts: [usize; 3],
    pub test_class_counts: [usize; 3],
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub cv_accuracy: Option<f64>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub format_version: u32,
    pub seed: u64,
    pub train_fraction: Fraction,
    pub split_digest: String,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub columns: Vec<String>,
    pub patterns: Vec<PatternReport>,
    pub label_histogram: LabelHistogram,
    pub flags: Vec<String>,
}

fn class_counts(y: &[usize]) -> [usize; 3] {
    let mut c = [0; 3];
    y.iter().for_each(|&l| c[l] += 1);
    c
}

pub fn evaluate(
    models: &[PatternModel],
    matrix: &EncodedMatrix,
    labels: &[LabelSet],
    split: &SplitIndices,
) -> Result<EvaluationReport> {
    check_alignment(matrix, labels, split)?;
    let digest = split_digest(split);
    if models.len() != Pattern::ALL.len() {
        return Err(Error::ShapeMismatch(format!("expected 5 models, got {}", models.len())));
    }
    let test_x = matrix.select(&split.test_ids);
    let mut flags = Vec::new();
    let mut patterns = Vec::new();
    for (m, &pattern) in models.iter().zip(&Pattern::ALL) {
        if m.pattern != pattern {
            return Err(Error::ShapeMismatch(format!("model for {} found where {} expected", m.pattern, pattern)));
        }
        if m.split_digest != digest {
            return Err(Error::SplitMismatch(format!(
                "{} model was trained on split {} but evaluation uses {}",
                pattern.key(),
                &m.split_digest[..12.min(m.split_digest.len())],
                &digest[..12]
            )));
        }
        let train_y = codes(labels, &split.train_ids, pattern);
        let test_y = codes(labels, &split.test_ids, pattern);
        let predicted = m.predict_rows(&test_x)?;
        let confusion = confusion_matrix(&test_y, &predicted, N_CLASSES)?;
        if m.degenerate {
            flags.push(format!("{}: training rows hold one class; prior-only model", pattern.key()));
        }
        if !m.small_classes.is_empty() {
            flags.push(format!(
                "{}: classes {:?} have fewer members than cross-validation folds",
                pattern.key(),
                m.small_classes
            ));
        }
        for r in &confusion.empty_rows {
            flags.push(format!("{}: no test rows with label {r}; confusion row left at zero", pattern.key()));
        }
        patterns.push(PatternReport {
            pattern,
            name: pattern.to_string(),
            weighted_accuracy: weighted_accuracy(&test_y, &predicted)?,
            majority_baseline: majority_baseline(&train_y, &test_y)?,
            published_accuracy: PUBLISHED_ACCURACY[pattern.index()],
            confusion,
            train_class_counts: class_counts(&train_y),
            test_class_counts: class_counts(&test_y),
            learning_rate: m.learning_rate,
            n_estimators: m.n_estimators,
            cv_accuracy: m.cv_accuracy,
            degenerate: m.degenerate,
        });
    }
    Ok(EvaluationReport {
        format_version: REPORT_FORMAT_VERSION,
        seed: split.seed,
        train_fraction: split.train_fraction,
        split_digest: digest,
        train_ids: split.train_ids.clone(),
        test_ids: split.test_ids.clone(),
        columns: matrix.column_spec.iter().map(|c| c.name()).collect(),
        patterns,
        label_histogram: label_histogram(labels),
        flags,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NamedValue {
    pub name: String,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternImportance {
    pub pattern: Pattern,
    /// One entry per encoded column.
    pub columns: Vec<NamedValue>,
    /// Column importances summed per source feature.
    pub features: Vec<NamedValue>,
}

pub const FOREST_TREES: usize = 100;

/// Random-forest importances per pattern, fitted on `rows`.
pub fn importance_report(
    matrix: &EncodedMatrix,
    labels: &[LabelSet],
    rows: &[usize],
    n_trees: usize,
    seed: u64,
) -> Result<Vec<PatternImportance>> {
    let x = matrix.select(rows);
    Pattern::ALL
        .iter()
        .map(|&pattern| {
            let y = codes(labels, rows, pattern);
            let forest = fit_random_forest(&x, &y, n_trees, seed)?;
            let imp = feature_importances(&forest)?;
            let columns = matrix
                .column_spec
                .iter()
                .zip(&imp)
                .map(|(c, &value)| NamedValue { name: c.name(), value })
                .collect();
            let features = super::features::SOURCE_FEATURES
                .iter()
                .enumerate()
                .map(|(s, name)| NamedValue {
                    name: name.to_string(),
                    value: matrix
                        .column_spec
                        .iter()
                        .zip(&imp)
                        .filter(|(c, _)| c.source == s)
                        .map(|(_, v)| v)
                        .sum(),
                })
                .collect();
            Ok(PatternImportance {
                pattern,
                columns,
                features,
            })
        })
        .collect()
}
