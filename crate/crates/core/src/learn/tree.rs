//! CART decision trees.
//!
//! Splits are axis-aligned, `x[feature] <= threshold` going left, with the
//! threshold at the midpoint of two consecutive distinct values present in
//! the node. The best split maximizes the weighted impurity decrease
//! `n·I(node) − n_l·I(left) − n_r·I(right)`; a candidate only replaces the
//! current best when it is better by more than [`GAIN_EPS`], so ties go to
//! the lowest feature index and then the lowest threshold. A split is kept
//! only when its decrease exceeds [`GAIN_EPS`].

use rand::seq::index::sample;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Rng;

/// Tolerance used both for comparing candidate splits and for accepting one.
pub const GAIN_EPS: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TreeMode {
    ClassificationGini,
    RegressionMse,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TreeParams {
    /// `None` grows until the other stopping rules apply.
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
}

impl Default for TreeParams {
    fn default() -> Self {
        TreeParams {
            max_depth: None,
            min_samples_leaf: 1,
        }
    }
}

impl TreeParams {
    pub fn with_depth(max_depth: usize) -> Self {
        TreeParams {
            max_depth: Some(max_depth),
            min_samples_leaf: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LeafValue {
    /// Class proportions, indexed by class code.
    Distribution(Vec<f64>),
    Value(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Node {
    Leaf {
        value: LeafValue,
        n_samples: usize,
    },
    Split {
        feature: usize,
        threshold: f64,
        n_samples: usize,
        /// Weighted impurity decrease achieved by this split.
        impurity_decrease: f64,
        left: Box<Node>,
        right: Box<Node>,
    },
}

impl Node {
    pub fn n_samples(&self) -> usize {
        match self {
            Node::Leaf { n_samples, .. } | Node::Split { n_samples, .. } => *n_samples,
        }
    }

    fn depth(&self) -> usize {
        match self {
            Node::Leaf { .. } => 0,
            Node::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
        }
    }

    fn visit_splits(&self, f: &mut impl FnMut(usize, f64)) {
        if let Node::Split {
            feature,
            impurity_decrease,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *impurity_decrease);
            left.visit_splits(f);
            right.visit_splits(f);
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub mode: TreeMode,
    pub n_features: usize,
    /// Zero for regression trees.
    pub n_classes: usize,
    pub params: TreeParams,
    pub root: Node,
}

impl DecisionTree {
    pub fn leaf(&self, x: &[f64]) -> Result<&LeafValue> {
        if x.len() != self.n_features {
            return Err(Error::DimensionMismatch {
                expected: self.n_features,
                got: x.len(),
            });
        }
        let mut node = &self.root;
        loop {
            match node {
                Node::Leaf { value, .. } => return Ok(value),
                Node::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => node = if x[*feature] <= *threshold { left } else { right },
            }
        }
    }

    /// Class distribution of the leaf `x` falls into.
    pub fn predict_proba(&self, x: &[f64]) -> Result<&[f64]> {
        match self.leaf(x)? {
            LeafValue::Distribution(d) => Ok(d),
            LeafValue::Value(_) => Err(Error::ShapeMismatch("regression tree has no class distribution".into())),
        }
    }

    /// Most probable class, lowest code on ties.
    pub fn predict_class(&self, x: &[f64]) -> Result<usize> {
        Ok(argmax(self.predict_proba(x)?))
    }

    pub fn predict_value(&self, x: &[f64]) -> Result<f64> {
        match self.leaf(x)? {
            LeafValue::Value(v) => Ok(*v),
            LeafValue::Distribution(_) => Err(Error::ShapeMismatch("classification tree has no real output".into())),
        }
    }

    pub fn depth(&self) -> usize {
        self.root.depth()
    }

    pub fn n_splits(&self) -> usize {
        let mut n = 0;
        self.root.visit_splits(&mut |_, _| n += 1);
        n
    }

    /// Calls `f(feature, impurity_decrease)` for every split node.
    pub fn for_each_split(&self, mut f: impl FnMut(usize, f64)) {
        self.root.visit_splits(&mut f);
    }
}

/// First index of the maximum; lowest index wins ties.
pub fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

/// Gini impurity `1 − Σ p²` of a vector of class counts.
pub fn gini(counts: &[f64]) -> f64 {
    let n: f64 = counts.iter().sum();
    if n == 0.0 {
        return 0.0;
    }
    1.0 - counts.iter().map(|c| (c / n) * (c / n)).sum::<f64>()
}

/// Fits a tree. In classification mode `y` holds class codes as
/// non-negative integers.
pub fn fit_tree(x: &[Vec<f64>], y: &[f64], params: &TreeParams, mode: TreeMode) -> Result<DecisionTree> {
    check_xy(x, y.len())?;
    let binned = Binned::new(x)?;
    let idx: Vec<usize> = (0..x.len()).collect();
    match mode {
        TreeMode::ClassificationGini => {
            let classes = class_codes(y)?;
            Ok(grow_classifier(&binned, &classes, idx, params, None))
        }
        TreeMode::RegressionMse => {
            if y.iter().any(|v| !v.is_finite()) {
                return Err(Error::ShapeMismatch("targets must be finite".into()));
            }
            Ok(grow_regressor(&binned, y, &idx, params, &|rows: &[usize]| mean_of(y, rows)))
        }
    }
}

pub(crate) fn class_codes(y: &[f64]) -> Result<Vec<usize>> {
    y.iter()
        .map(|&v| {
            if v >= 0.0 && v.fract() == 0.0 && v < u32::MAX as f64 {
                Ok(v as usize)
            } else {
                Err(Error::ShapeMismatch(format!("class label {v} is not a non-negative integer")))
            }
        })
        .collect()
}

pub(crate) fn check_xy(x: &[Vec<f64>], n_y: usize) -> Result<usize> {
    if x.is_empty() {
        return Err(Error::EmptyData);
    }
    if x.len() != n_y {
        return Err(Error::ShapeMismatch(format!("{} rows but {} targets", x.len(), n_y)));
    }
    let d = x[0].len();
    if let Some(row) = x.iter().find(|r| r.len() != d) {
        return Err(Error::ShapeMismatch(format!("row of width {} in a matrix of width {d}", row.len())));
    }
    if x.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::ShapeMismatch("features must be finite".into()));
    }
    Ok(d)
}

fn mean_of(y: &[f64], rows: &[usize]) -> f64 {
    rows.iter().map(|&i| y[i]).sum::<f64>() / rows.len() as f64
}

/// Features mapped to the rank of their value among the distinct values of
/// that column, computed once and shared by every tree fitted on `x`.
pub(crate) struct Binned {
    pub(crate) n_features: usize,
    /// `codes[f][row]`
    codes: Vec<Vec<u32>>,
    /// `values[f][code]`, ascending.
    values: Vec<Vec<f64>>,
}

impl Binned {
    pub(crate) fn new(x: &[Vec<f64>]) -> Result<Self> {
        let d = check_xy(x, x.len())?;
        let mut codes = Vec::with_capacity(d);
        let mut values = Vec::with_capacity(d);
        for f in 0..d {
            let mut vals: Vec<f64> = x.iter().map(|r| r[f] + 0.0).collect();
            vals.sort_by(f64::total_cmp);
            vals.dedup();
            codes.push(
                x.iter()
                    .map(|r| vals.binary_search_by(|v| v.total_cmp(&(r[f] + 0.0))).expect("value present") as u32)
                    .collect(),
            );
            values.push(vals);
        }
        Ok(Binned {
            n_features: d,
            codes,
            values,
        })
    }

    fn threshold(&self, f: usize, lo: usize, hi: usize) -> f64 {
        let (a, b) = (self.values[f][lo], self.values[f][hi]);
        let mid = a / 2.0 + b / 2.0;
        // Adjacent floats can round the midpoint up onto `b`.
        if mid >= b {
            a
        } else {
            mid
        }
    }
}

/// Random feature subset drawn at every node.
pub(crate) struct FeatureSampler<'r> {
    pub rng: &'r mut Rng,
    pub max_features: usize,
}

impl FeatureSampler<'_> {
    fn draw(&mut self, d: usize) -> Vec<usize> {
        let mut f = sample(self.rng, d, self.max_features.min(d)).into_vec();
        f.sort_unstable();
        f
    }
}

/// Impurity statistics of a set of rows: class counts, or
/// `[count, sum, sum of squares]` for regression.
trait Criterion {
    fn width(&self) -> usize;
    fn add(&self, acc: &mut [f64], row: usize);
    fn count(&self, acc: &[f64]) -> f64;
    /// `n · impurity`.
    fn total(&self, acc: &[f64]) -> f64;
    fn is_pure(&self, rows: &[usize]) -> bool;
}

struct Gini<'a> {
    y: &'a [usize],
    k: usize,
}

impl Criterion for Gini<'_> {
    fn width(&self) -> usize {
        self.k
    }
    fn add(&self, acc: &mut [f64], row: usize) {
        acc[self.y[row]] += 1.0;
    }
    fn count(&self, acc: &[f64]) -> f64 {
        acc.iter().sum()
    }
    fn total(&self, acc: &[f64]) -> f64 {
        let n = self.count(acc);
        if n == 0.0 {
            return 0.0;
        }
        n - acc.iter().map(|c| c * c).sum::<f64>() / n
    }
    fn is_pure(&self, rows: &[usize]) -> bool {
        rows.iter().all(|&r| self.y[r] == self.y[rows[0]])
    }
}

struct Mse<'a> {
    y: &'a [f64],
}

impl Criterion for Mse<'_> {
    fn width(&self) -> usize {
        3
    }
    fn add(&self, acc: &mut [f64], row: usize) {
        let v = self.y[row];
        acc[0] += 1.0;
        acc[1] += v;
        acc[2] += v * v;
    }
    fn count(&self, acc: &[f64]) -> f64 {
        acc[0]
    }
    fn total(&self, acc: &[f64]) -> f64 {
        if acc[0] == 0.0 {
            return 0.0;
        }
        (acc[2] - acc[1] * acc[1] / acc[0]).max(0.0)
    }
    fn is_pure(&self, rows: &[usize]) -> bool {
        rows.iter().all(|&r| self.y[r] == self.y[rows[0]])
    }
}

struct Best {
    feature: usize,
    threshold: f64,
    gain: f64,
}

fn best_split<C: Criterion>(
    binned: &Binned,
    crit: &C,
    rows: &[usize],
    features: &[usize],
    min_leaf: f64,
    hist: &mut Vec<f64>,
) -> Option<Best> {
    let w = crit.width();
    let mut node = vec![0.0; w];
    for &r in rows {
        crit.add(&mut node, r);
    }
    let parent = crit.total(&node);
    let mut best: Option<Best> = None;
    let mut left = vec![0.0; w];
    let mut right = vec![0.0; w];
    for &f in features {
        let nb = binned.values[f].len();
        if nb < 2 {
            continue;
        }
        hist.clear();
        hist.resize(nb * w, 0.0);
        let codes = &binned.codes[f];
        for &r in rows {
            let b = codes[r] as usize;
            crit.add(&mut hist[b * w..(b + 1) * w], r);
        }
        left.iter_mut().for_each(|v| *v = 0.0);
        let mut prev: Option<usize> = None;
        for b in 0..nb {
            let bin = &hist[b * w..(b + 1) * w];
            if crit.count(bin) == 0.0 {
                continue;
            }
            if let Some(p) = prev {
                for j in 0..w {
                    right[j] = node[j] - left[j];
                }
                if crit.count(&left) >= min_leaf && crit.count(&right) >= min_leaf {
                    let gain = parent - crit.total(&left) - crit.total(&right);
                    if best.as_ref().map_or(true, |bst| gain > bst.gain + GAIN_EPS) {
                        best = Some(Best {
                            feature: f,
                            threshold: binned.threshold(f, p, b),
                            gain,
                        });
                    }
                }
            }
            for j in 0..w {
                left[j] += bin[j];
            }
            prev = Some(b);
        }
    }
    best.filter(|b| b.gain > GAIN_EPS)
}

struct Grower<'a, C, L> {
    binned: &'a Binned,
    crit: C,
    params: &'a TreeParams,
    leaf: L,
    sampler: Option<FeatureSampler<'a>>,
    hist: Vec<f64>,
}

impl<C: Criterion, L: Fn(&[usize]) -> LeafValue> Grower<'_, C, L> {
    fn grow(&mut self, rows: Vec<usize>, depth: usize) -> Node {
        let n = rows.len();
        let at_limit = self.params.max_depth.is_some_and(|m| depth >= m);
        let min_leaf = self.params.min_samples_leaf.max(1);
        if at_limit || n < 2 * min_leaf || self.crit.is_pure(&rows) {
            return self.leaf_node(&rows);
        }
        let d = self.binned.n_features;
        let features: Vec<usize> = match &mut self.sampler {
            Some(s) => s.draw(d),
            None => (0..d).collect(),
        };
        let Some(best) = best_split(self.binned, &self.crit, &rows, &features, min_leaf as f64, &mut self.hist)
        else {
            return self.leaf_node(&rows);
        };
        let codes = &self.binned.codes[best.feature];
        let vals = &self.binned.values[best.feature];
        let (l, r): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&i| vals[codes[i] as usize] <= best.threshold);
        Node::Split {
            feature: best.feature,
            threshold: best.threshold,
            n_samples: n,
            impurity_decrease: best.gain,
            left: Box::new(self.grow(l, depth + 1)),
            right: Box::new(self.grow(r, depth + 1)),
        }
    }

    fn leaf_node(&self, rows: &[usize]) -> Node {
        Node::Leaf {
            value: (self.leaf)(rows),
            n_samples: rows.len(),
        }
    }
}

/// Classification tree over `rows` (which may repeat, for bootstrap samples).
pub(crate) fn grow_classifier(
    binned: &Binned,
    y: &[usize],
    rows: Vec<usize>,
    params: &TreeParams,
    sampler: Option<FeatureSampler<'_>>,
) -> DecisionTree {
    let k = y.iter().copied().max().map_or(1, |m| m + 1);
    let leaf = |rows: &[usize]| {
        let mut d = vec![0.0; k];
        for &r in rows {
            d[y[r]] += 1.0;
        }
        let n = rows.len() as f64;
        d.iter_mut().for_each(|v| *v /= n);
        LeafValue::Distribution(d)
    };
    let mut g = Grower {
        binned,
        crit: Gini { y, k },
        params,
        leaf,
        sampler,
        hist: Vec::new(),
    };
    let root = g.grow(rows, 0);
    DecisionTree {
        mode: TreeMode::ClassificationGini,
        n_features: binned.n_features,
        n_classes: k,
        params: *params,
        root,
    }
}

/// Regression tree split on squared error, with leaf values from `leaf`.
pub(crate) fn grow_regressor(
    binned: &Binned,
    y: &[f64],
    rows: &[usize],
    params: &TreeParams,
    leaf: &dyn Fn(&[usize]) -> f64,
) -> DecisionTree {
    let mut g = Grower {
        binned,
        crit: Mse { y },
        params,
        leaf: |rows: &[usize]| LeafValue::Value(leaf(rows)),
        sampler: None,
        hist: Vec::new(),
    };
    let root = g.grow(rows.to_vec(), 0);
    DecisionTree {
        mode: TreeMode::RegressionMse,
        n_features: binned.n_features,
        n_classes: 0,
        params: *params,
        root,
    }
}
