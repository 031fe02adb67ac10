//! Random forests with mean-decrease-in-impurity feature importances.
//!
//! Tree `t` draws its bootstrap sample and its per-node feature subsets from
//! the stream `(seed, t)`, so a forest does not depend on how many threads
//! built it.

use rand::Rng as _;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::tree::{argmax, grow_classifier, Binned, DecisionTree, FeatureSampler, TreeParams};
use crate::error::{Error, Result};
use crate::rng;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MaxFeatures {
    /// `max(1, ⌊√d⌋)` features per split.
    Sqrt,
    All,
    Count(usize),
}

impl MaxFeatures {
    pub fn resolve(self, d: usize) -> usize {
        match self {
            MaxFeatures::Sqrt => ((d as f64).sqrt().floor() as usize).max(1),
            MaxFeatures::All => d,
            MaxFeatures::Count(n) => n.clamp(1, d.max(1)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestParams {
    pub n_trees: usize,
    pub bootstrap: bool,
    pub max_features: MaxFeatures,
    pub tree: TreeParams,
}

impl ForestParams {
    pub fn new(n_trees: usize) -> Self {
        ForestParams {
            n_trees,
            bootstrap: true,
            max_features: MaxFeatures::Sqrt,
            tree: TreeParams::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForest {
    pub trees: Vec<DecisionTree>,
    pub params: ForestParams,
    pub seed: u64,
    pub n_features: usize,
    pub n_classes: usize,
    /// Fraction of rows (with at least one out-of-bag tree) whose
    /// out-of-bag vote is correct. `None` without bootstrap.
    pub oob_accuracy: Option<f64>,
}

impl RandomForest {
    pub fn n_trees(&self) -> usize {
        self.trees.len()
    }

    /// Majority vote of the trees' predicted classes, lowest class on ties.
    pub fn predict(&self, x: &[f64]) -> Result<usize> {
        if self.trees.is_empty() {
            return Err(Error::UnfittedModel);
        }
        let mut votes = vec![0.0; self.n_classes];
        for t in &self.trees {
            votes[t.predict_class(x)?] += 1.0;
        }
        Ok(argmax(&votes))
    }
}

pub fn fit_random_forest(x: &[Vec<f64>], y: &[usize], n_trees: usize, seed: u64) -> Result<RandomForest> {
    fit_random_forest_with(x, y, &ForestParams::new(n_trees), seed)
}

pub fn fit_random_forest_with(x: &[Vec<f64>], y: &[usize], params: &ForestParams, seed: u64) -> Result<RandomForest> {
    if params.n_trees == 0 {
        return Err(Error::InvalidHyperparameter("a forest needs at least one tree".into()));
    }
    super::tree::check_xy(x, y.len())?;
    let binned = Binned::new(x)?;
    let n = x.len();
    let d = binned.n_features;
    let mtry = params.max_features.resolve(d);

    let grown: Vec<(DecisionTree, Vec<bool>)> = (0..params.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut r = rng::stream(seed, t as u64);
            let mut in_bag = vec![!params.bootstrap; n];
            let rows: Vec<usize> = if params.bootstrap {
                (0..n)
                    .map(|_| {
                        let i = r.random_range(0..n);
                        in_bag[i] = true;
                        i
                    })
                    .collect()
            } else {
                (0..n).collect()
            };
            let sampler = (mtry < d).then(|| FeatureSampler {
                rng: &mut r,
                max_features: mtry,
            });
            (grow_classifier(&binned, y, rows, &params.tree, sampler), in_bag)
        })
        .collect();

    let n_classes = y.iter().copied().max().unwrap_or(0) + 1;
    let oob_accuracy = if params.bootstrap {
        let mut correct = 0usize;
        let mut voted = 0usize;
        for i in 0..n {
            let mut votes = vec![0.0; n_classes];
            let mut any = false;
            for (t, in_bag) in &grown {
                if !in_bag[i] {
                    votes[t.predict_class(&x[i])?] += 1.0;
                    any = true;
                }
            }
            if any {
                voted += 1;
                correct += (argmax(&votes) == y[i]) as usize;
            }
        }
        (voted > 0).then(|| correct as f64 / voted as f64)
    } else {
        None
    };

    Ok(RandomForest {
        trees: grown.into_iter().map(|(t, _)| t).collect(),
        params: *params,
        seed,
        n_features: d,
        n_classes,
        oob_accuracy,
    })
}

/// Mean decrease in impurity per feature: each tree's split gains are
/// normalized to sum 1, averaged over trees, and normalized again. All zero
/// when no tree split at all.
pub fn feature_importances(forest: &RandomForest) -> Result<Vec<f64>> {
    if forest.trees.is_empty() {
        return Err(Error::UnfittedModel);
    }
    let d = forest.n_features;
    let mut acc = vec![0.0; d];
    for t in &forest.trees {
        let mut per = vec![0.0; d];
        t.for_each_split(|f, gain| per[f] += gain);
        let total: f64 = per.iter().sum();
        if total > 0.0 {
            for (a, p) in acc.iter_mut().zip(&per) {
                *a += p / total;
            }
        }
    }
    let total: f64 = acc.iter().sum();
    if total > 0.0 {
        acc.iter_mut().for_each(|a| *a /= total);
    }
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::learn::tree::{fit_tree, TreeMode};

    fn toy() -> (Vec<Vec<f64>>, Vec<usize>) {
        let x: Vec<Vec<f64>> = (0..40).map(|i| vec![i as f64, 3.0]).collect();
        let y = (0..40).map(|i| (i >= 20) as usize).collect();
        (x, y)
    }

    #[test]
    fn degenerate_forest_equals_tree() {
        let (x, y) = toy();
        let params = ForestParams {
            n_trees: 1,
            bootstrap: false,
            max_features: MaxFeatures::All,
            tree: TreeParams::default(),
        };
        let f = fit_random_forest_with(&x, &y, &params, 3).unwrap();
        let yf: Vec<f64> = y.iter().map(|&c| c as f64).collect();
        let t = fit_tree(&x, &yf, &TreeParams::default(), TreeMode::ClassificationGini).unwrap();
        assert_eq!(f.trees[0], t);
        for q in -2..45 {
            let p = [q as f64 + 0.5, 3.0];
            assert_eq!(f.predict(&p).unwrap(), t.predict_class(&p).unwrap());
        }
    }

    #[test]
    fn deterministic() {
        let (x, y) = toy();
        assert_eq!(fit_random_forest(&x, &y, 8, 1).unwrap(), fit_random_forest(&x, &y, 8, 1).unwrap());
    }

    #[test]
    fn constant_feature_has_zero_importance() {
        let (x, y) = toy();
        let imp = feature_importances(&fit_random_forest(&x, &y, 10, 2).unwrap()).unwrap();
        assert_eq!(imp[1], 0.0);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn no_splits_gives_zero_importances() {
        let x = vec![vec![1.0], vec![2.0]];
        let f = fit_random_forest(&x, &[1, 1], 3, 0).unwrap();
        assert_eq!(feature_importances(&f).unwrap(), vec![0.0]);
    }

    #[test]
    fn unfitted() {
        let (x, y) = toy();
        let mut f = fit_random_forest(&x, &y, 1, 0).unwrap();
        f.trees.clear();
        assert!(matches!(feature_importances(&f), Err(Error::UnfittedModel)));
        assert!(matches!(fit_random_forest(&x, &y, 0, 0), Err(Error::InvalidHyperparameter(_))));
    }
}
