//! Tree learners: CART, random forests, gradient boosting and grid search.

mod forest;
mod gbt;
mod grid;
mod tree;

pub use forest::{feature_importances, fit_random_forest, fit_random_forest_with, ForestParams, MaxFeatures, RandomForest};
pub use gbt::{
    class_priors, fit_gbt, fit_gbt_or_prior, leaf_count, predict_gbt, softmax, GbtModel, DEFAULT_MAX_DEPTH,
    GBT_FORMAT_VERSION,
};
pub use grid::{grid_search, stratified_folds, GridCell, GridResult, HyperGrid};
pub use tree::{argmax, fit_tree, gini, DecisionTree, LeafValue, Node, TreeMode, TreeParams, GAIN_EPS};
