//! From cleaned records to trained models and evaluation reports.

mod features;
mod metrics;
mod run;
mod train;

pub use features::{
    build_feature_vector, encode_features, encode_row, location_category, median, ColumnKind, ColumnSpec,
    EncodedMatrix, FeatureVector, Imputation, Visibility, WidgetType, SOURCE_FEATURES, UNKNOWN,
};
pub use metrics::{confusion_matrix, majority_baseline, majority_class, mean_std, weighted_accuracy, ConfusionMatrix};
pub use run::{
    cluster_records, feature_vectors, labeled_records, multi_seed, not_yes_phrases, prepare, run_seed,
    split_and_encode, Labeled, MultiSeedSummary, PatternSpread, Prepared, SeedRun, ACCURACY_TOLERANCE,
    CHANCE_LEVEL,
};
pub use train::{
    evaluate, importance_report, split_digest, train_all, train_pattern, EvaluationReport, NamedValue,
    PatternImportance, PatternModel, PatternReport, FOREST_TREES, MODEL_FORMAT_VERSION, N_CLASSES,
    PUBLISHED_ACCURACY, REPORT_FORMAT_VERSION,
};
