//! End-to-end driver: records to features, single-seed runs and the
//! multi-seed summary.

use serde::{Deserialize, Serialize};

use super::features::{build_feature_vector, encode_features, EncodedMatrix, FeatureVector};
use super::metrics::mean_std;
use super::train::{evaluate, train_all, EvaluationReport, PatternModel, PUBLISHED_ACCURACY};
use crate::cluster::{cluster_phrases, PhraseClustering};
use crate::dataset::{resolve_labels, split_train_test, BannerRecord, Fraction, LabelSet, Pattern, SplitIndices};
use crate::error::Result;
use crate::learn::HyperGrid;
use crate::text::{score_sentiment, translate, Lexicon, TextProvider};

/// Records whose labels resolve, with their labels, plus the site ids of
/// the ones that did not.
#[derive(Debug, Clone)]
pub struct Labeled {
    pub indices: Vec<usize>,
    pub labels: Vec<LabelSet>,
    pub dropped: Vec<String>,
}

pub fn labeled_records(records: &[BannerRecord]) -> Labeled {
    let mut out = Labeled {
        indices: Vec::new(),
        labels: Vec::new(),
        dropped: Vec::new(),
    };
    for (i, r) in records.iter().enumerate() {
        match resolve_labels(&r.annotations) {
            Ok(l) => {
                out.indices.push(i);
                out.labels.push(l);
            }
            Err(_) => out.dropped.push(r.site_id.clone()),
        }
    }
    out
}

/// "Not yes" texts after translation, one per record.
pub fn not_yes_phrases(records: &[BannerRecord], provider: &TextProvider) -> Result<Vec<String>> {
    records.iter().map(|r| translate(&r.not_yes_text, provider)).collect()
}

pub fn cluster_records(records: &[BannerRecord], k: usize, seed: u64, provider: &TextProvider) -> Result<PhraseClustering> {
    cluster_phrases(&not_yes_phrases(records, provider)?, k, seed)
}

/// Feature vectors for `records`, scoring both reviewer comments after
/// translation.
pub fn feature_vectors(
    records: &[BannerRecord],
    cluster_ids: &[usize],
    lexicon: &Lexicon,
    provider: &TextProvider,
) -> Result<Vec<FeatureVector>> {
    records
        .iter()
        .zip(cluster_ids)
        .map(|(r, &c)| {
            let clarity = score_sentiment(&translate(&r.clarity_comment, provider)?, lexicon, provider)?;
            let listing = score_sentiment(&translate(&r.cookie_listing_comment, provider)?, lexicon, provider)?;
            Ok(build_feature_vector(r, c, [clarity, listing]))
        })
        .collect()
}

/// Everything a split-level run needs, aligned row by row.
#[derive(Debug, Clone)]
pub struct Prepared {
    pub site_ids: Vec<String>,
    pub vectors: Vec<FeatureVector>,
    pub labels: Vec<LabelSet>,
    pub dropped: Vec<String>,
}

/// Keeps labeled records only; `cluster_ids` are indexed like `records`.
pub fn prepare(
    records: &[BannerRecord],
    cluster_ids: &[usize],
    lexicon: &Lexicon,
    provider: &TextProvider,
) -> Result<Prepared> {
    let labeled = labeled_records(records);
    let kept: Vec<BannerRecord> = labeled.indices.iter().map(|&i| records[i].clone()).collect();
    let ids: Vec<usize> = labeled.indices.iter().map(|&i| cluster_ids[i]).collect();
    Ok(Prepared {
        site_ids: kept.iter().map(|r| r.site_id.clone()).collect(),
        vectors: feature_vectors(&kept, &ids, lexicon, provider)?,
        labels: labeled.labels,
        dropped: labeled.dropped,
    })
}

#[derive(Debug, Clone)]
pub struct SeedRun {
    pub split: SplitIndices,
    pub matrix: EncodedMatrix,
    pub models: Vec<PatternModel>,
    pub report: EvaluationReport,
}

pub fn split_and_encode(prepared: &Prepared, fraction: Fraction, seed: u64) -> Result<(SplitIndices, EncodedMatrix)> {
    let split = split_train_test(prepared.vectors.len(), fraction, seed)?;
    let matrix = encode_features(&prepared.vectors, &split.train_ids)?;
    Ok((split, matrix))
}

pub fn run_seed(prepared: &Prepared, fraction: Fraction, grid: &HyperGrid, seed: u64) -> Result<SeedRun> {
    let (split, matrix) = split_and_encode(prepared, fraction, seed)?;
    let models = train_all(&matrix, &prepared.labels, &split, grid, seed)?;
    let report = evaluate(&models, &matrix, &prepared.labels, &split)?;
    Ok(SeedRun {
        split,
        matrix,
        models,
        report,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternSpread {
    pub pattern: Pattern,
    pub accuracies: Vec<f64>,
    pub baselines: Vec<f64>,
    pub mean: f64,
    pub std: f64,
    pub published_accuracy: f64,
    pub within_tolerance: bool,
    pub above_chance: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MultiSeedSummary {
    pub seeds: Vec<u64>,
    pub tolerance: f64,
    pub chance_level: f64,
    pub patterns: Vec<PatternSpread>,
}

pub const ACCURACY_TOLERANCE: f64 = 0.10;
pub const CHANCE_LEVEL: f64 = 1.0 / 3.0;

/// Runs seeds `seed, seed + 1, ..., seed + count - 1`.
pub fn multi_seed(prepared: &Prepared, fraction: Fraction, grid: &HyperGrid, seed: u64, count: usize) -> Result<MultiSeedSummary> {
    let seeds: Vec<u64> = (0..count as u64).map(|i| seed.wrapping_add(i)).collect();
    let reports: Vec<EvaluationReport> = seeds
        .iter()
        .map(|&s| run_seed(prepared, fraction, grid, s).map(|r| r.report))
        .collect::<Result<_>>()?;
    let patterns = Pattern::ALL
        .iter()
        .map(|&p| {
            let accuracies: Vec<f64> = reports.iter().map(|r| r.patterns[p.index()].weighted_accuracy).collect();
            let baselines = reports.iter().map(|r| r.patterns[p.index()].majority_baseline).collect();
            let (mean, std) = mean_std(&accuracies);
            let published = PUBLISHED_ACCURACY[p.index()];
            PatternSpread {
                pattern: p,
                accuracies,
                baselines,
                mean,
                std,
                published_accuracy: published,
                within_tolerance: (mean - published).abs() <= ACCURACY_TOLERANCE,
                above_chance: mean > CHANCE_LEVEL,
            }
        })
        .collect();
    Ok(MultiSeedSummary {
        seeds,
        tolerance: ACCURACY_TOLERANCE,
        chance_level: CHANCE_LEVEL,
        patterns,
    })
}
