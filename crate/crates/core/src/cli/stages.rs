//! The pipeline stages behind each command. Every stage reads the files of
//! the stages before it from the output directory and writes its own.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::config::{RunConfig, CONFIG_FILE};
use crate::cluster::PhraseClustering;
use crate::dataset::{
    clean_record, label_histogram, load_raw_csv_with, split_train_test, BannerRecord, ColumnMap, Fraction,
    LabelHistogram, LabelSet, LoadReport, Pattern,
};
use crate::error::{Error, Result};
use crate::pipeline::{
    cluster_records, encode_features, evaluate, importance_report, labeled_records, multi_seed, prepare,
    split_and_encode, split_digest, train_all, EvaluationReport, FeatureVector, Imputation, MultiSeedSummary,
    PatternImportance, PatternModel, Prepared, FOREST_TREES,
};
use crate::text::TextProvider;

pub const CLEANED: &str = "cleaned.csv";
pub const LOAD_REPORT: &str = "load_report.json";
pub const LABELS: &str = "labels.csv";
pub const HISTOGRAM: &str = "label_histogram.json";
pub const CLUSTERS: &str = "clusters.csv";
pub const CENTROIDS: &str = "centroids.json";
pub const FEATURES: &str = "features.json";
pub const TRAIN_SUMMARY: &str = "train_summary.json";
pub const REPORT: &str = "report.json";
pub const ACCURACY: &str = "accuracy.csv";
pub const CONFUSION: &str = "confusion.csv";
pub const IMPORTANCES: &str = "importances.csv";
pub const MULTISEED: &str = "multiseed.json";
pub const MULTISEED_CSV: &str = "multiseed.csv";
pub const LOCK: &str = ".lock";

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Clean,
    Cluster,
    Train,
    Evaluate,
}

impl Stage {
    pub const ALL: [Stage; 4] = [Stage::Clean, Stage::Cluster, Stage::Train, Stage::Evaluate];

    /// Files the stage writes, relative to the output directory.
    pub fn outputs(self) -> Vec<String> {
        let names: &[&str] = match self {
            Stage::Clean => &[CONFIG_FILE, CLEANED, LOAD_REPORT, LABELS, HISTOGRAM],
            Stage::Cluster => &[CLUSTERS, CENTROIDS],
            Stage::Train => &[FEATURES, TRAIN_SUMMARY],
            Stage::Evaluate => &[REPORT, ACCURACY, CONFUSION, IMPORTANCES, MULTISEED, MULTISEED_CSV],
        };
        let mut out: Vec<String> = names.iter().map(|s| s.to_string()).collect();
        if self == Stage::Train {
            out.extend(Pattern::ALL.iter().map(|p| model_file(*p)));
        }
        out
    }
}

pub fn model_file(p: Pattern) -> String {
    format!("models/{}.json", p.key())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub tool: String,
    pub config_hash: String,
    pub seed: u64,
    pub provider: String,
}

/// A JSON output file: provenance plus the payload.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Artifact<T> {
    pub provenance: Provenance,
    pub content: T,
}

/// Exclusive use of an output directory for the life of the value.
#[derive(Debug)]
pub struct OutputLock {
    path: PathBuf,
}

impl OutputLock {
    pub fn acquire(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        let path = dir.join(LOCK);
        match OpenOptions::new().write(true).create_new(true).open(&path) {
            Ok(mut f) => {
                let _ = writeln!(f, "{}", std::process::id());
                Ok(OutputLock { path })
            }
            Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Err(Error::Locked(dir.to_path_buf())),
            Err(e) => Err(Error::io(&path, e)),
        }
    }
}

impl Drop for OutputLock {
    fn drop(&mut self) {
        let _ = std::fs::remove_file(&self.path);
    }
}

pub struct Context {
    pub cfg: RunConfig,
    pub hash: String,
    pub force: bool,
}

impl Context {
    pub fn new(cfg: RunConfig, force: bool) -> Result<Self> {
        cfg.validate()?;
        let hash = cfg.hash()?;
        Ok(Context { cfg, hash, force })
    }

    pub fn path(&self, name: &str) -> PathBuf {
        self.cfg.output_dir.join(name)
    }

    pub fn provenance(&self) -> Provenance {
        Provenance {
            tool: format!("darkbanner {}", env!("CARGO_PKG_VERSION")),
            config_hash: self.hash.clone(),
            seed: self.cfg.seed,
            provider: self.cfg.provider.as_str().to_string(),
        }
    }

    fn stamp_line(&self) -> String {
        format!("config_hash={} seed={}", self.hash, self.cfg.seed)
    }

    /// Fails with [`Error::Overwrite`] on the first existing output unless
    /// `--force` was given.
    pub fn check_outputs(&self, stages: &[Stage]) -> Result<()> {
        if self.force {
            return Ok(());
        }
        for s in stages {
            for name in s.outputs() {
                let p = self.path(&name);
                if p.exists() {
                    return Err(Error::Overwrite(p));
                }
            }
        }
        Ok(())
    }

    fn create(&self, name: &str) -> Result<BufWriter<File>> {
        let p = self.path(name);
        if let Some(dir) = p.parent() {
            std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        }
        Ok(BufWriter::new(File::create(&p).map_err(|e| Error::io(&p, e))?))
    }

    fn write_json<T: Serialize>(&self, name: &str, content: &T) -> Result<()> {
        let mut w = self.create(name)?;
        let artifact = Artifact {
            provenance: self.provenance(),
            content,
        };
        serde_json::to_writer_pretty(&mut w, &artifact)?;
        w.write_all(b"\n").and_then(|_| w.flush()).map_err(|e| Error::io(self.path(name), e))
    }

    fn read_json<T: DeserializeOwned>(&self, name: &str) -> Result<Artifact<T>> {
        let p = self.path(name);
        let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
        Ok(serde_json::from_str(&text)?)
    }

    /// A CSV writer whose first line is a `#` provenance comment.
    fn csv(&self, name: &str) -> Result<csv::Writer<BufWriter<File>>> {
        let mut w = self.create(name)?;
        writeln!(w, "# {}", self.stamp_line()).map_err(|e| Error::io(self.path(name), e))?;
        Ok(csv::Writer::from_writer(w))
    }

    fn provider_run<T>(&self, f: impl Fn(&TextProvider) -> Result<T>) -> Result<(T, bool)> {
        let provider = self.cfg.text_provider()?;
        match f(&provider) {
            Err(Error::ProviderUnavailable(msg)) if self.cfg.provider_fallback && provider != TextProvider::OfflineDefault => {
                eprintln!("warning: text provider unavailable ({msg}); using the offline provider");
                Ok((f(&TextProvider::OfflineDefault)?, true))
            }
            r => r.map(|t| (t, false)),
        }
    }

    fn cleaned_records(&self) -> Result<Vec<BannerRecord>> {
        let p = self.path(CLEANED);
        let file = File::open(&p).map_err(|e| Error::io(&p, e))?;
        let corpus = crate::dataset::read_corpus(file, &ColumnMap::default())?;
        Ok(corpus.records.iter().map(clean_record).collect())
    }
}

fn num(x: f64) -> String {
    format!("{x}")
}

fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

// ---- clean ----

pub fn clean(ctx: &Context) -> Result<String> {
    let input = ctx
        .cfg
        .input_csv
        .as_ref()
        .ok_or_else(|| Error::Config("no input file (use --input)".into()))?;
    let corpus = load_raw_csv_with(input, &ctx.cfg.column_map()?)?;
    let records: Vec<BannerRecord> = corpus.records.iter().map(clean_record).collect();
    let labeled = labeled_records(&records);
    let mut report: LoadReport = corpus.report;
    report.unlabeled_site_ids = labeled.dropped.clone();

    let mut conf = ctx.create(CONFIG_FILE)?;
    writeln!(conf, "# {}", ctx.stamp_line())
        .and_then(|_| conf.write_all(ctx.cfg.to_text_redacted().as_bytes()))
        .and_then(|_| conf.flush())
        .map_err(|e| Error::io(ctx.path(CONFIG_FILE), e))?;

    let mut w = ctx.create(CLEANED)?;
    crate::dataset::write_corpus(&mut w, &records, &[ctx.stamp_line()])?;
    w.flush().map_err(|e| Error::io(ctx.path(CLEANED), e))?;
    ctx.write_json(LOAD_REPORT, &report)?;

    let mut w = ctx.csv(LABELS)?;
    let mut header = vec!["site_id".to_string()];
    header.extend(Pattern::ALL.iter().map(|p| p.key().to_string()));
    w.write_record(&header)?;
    for (&i, l) in labeled.indices.iter().zip(&labeled.labels) {
        let mut row = vec![records[i].site_id.clone()];
        row.extend(Pattern::ALL.iter().map(|&p| l.get(p).to_string()));
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io(ctx.path(LABELS), e))?;

    let histogram = label_histogram(&labeled.labels);
    ctx.write_json(HISTOGRAM, &histogram)?;
    Ok(format!(
        "clean: {} records, {} labelled, {} malformed rows",
        records.len(),
        labeled.labels.len(),
        report.malformed_rows.len()
    ))
}

/// Reads `label_histogram.json` from an output directory.
pub fn read_histogram(out_dir: &Path) -> Result<LabelHistogram> {
    let p = out_dir.join(HISTOGRAM);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let a: Artifact<LabelHistogram> = serde_json::from_str(&text)?;
    Ok(a.content)
}

// ---- cluster ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CentroidFile {
    pub k: usize,
    pub sizes: Vec<usize>,
    pub inertia: f64,
    pub iterations_run: usize,
    pub centroids_xy: Vec<[f64; 2]>,
    pub explained_variance: Vec<f64>,
    pub pca_degenerate: bool,
    /// Centroids in the full embedding space.
    pub centroids: Vec<Vec<f64>>,
    pub provider_fallback_used: bool,
}

pub fn cluster(ctx: &Context) -> Result<String> {
    let records = ctx.cleaned_records()?;
    let (c, fallback): (PhraseClustering, bool) =
        ctx.provider_run(|p| cluster_records(&records, ctx.cfg.k_clusters, ctx.cfg.seed, p))?;
    let mut w = ctx.csv(CLUSTERS)?;
    w.write_record(["site_id", "text", "phrase", "canonical", "cluster_id", "x", "y"])?;
    for (r, a) in records.iter().zip(&c.assignments) {
        w.write_record([
            r.site_id.as_str(),
            r.not_yes_text.as_str(),
            a.phrase.as_str(),
            crate::cluster::canonical_phrase(&a.phrase).as_str(),
            &a.cluster_id.to_string(),
            &num(a.projected_xy[0]),
            &num(a.projected_xy[1]),
        ])?;
    }
    w.flush().map_err(|e| Error::io(ctx.path(CLUSTERS), e))?;
    let sizes = c.cluster_sizes();
    let file = CentroidFile {
        k: c.kmeans.k,
        sizes: sizes.clone(),
        inertia: c.kmeans.inertia,
        iterations_run: c.kmeans.iterations_run,
        centroids_xy: c.centroid_xy(),
        explained_variance: c.pca.explained_variance.clone(),
        pca_degenerate: c.pca.degenerate,
        centroids: c.kmeans.centroids.clone(),
        provider_fallback_used: fallback,
    };
    ctx.write_json(CENTROIDS, &file)?;
    Ok(format!("cluster: {} phrases in {} clusters, sizes {:?}", records.len(), c.kmeans.k, sizes))
}

fn cluster_ids(ctx: &Context, records: &[BannerRecord]) -> Result<Vec<usize>> {
    let p = ctx.path(CLUSTERS);
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_path(&p)
        .map_err(|e| match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::io(&p, io),
            other => Error::Config(format!("{}: {other:?}", p.display())),
        })?;
    let mut ids = Vec::new();
    for (row, rec) in r.records().zip(records) {
        let row = row?;
        if row.get(0) != Some(rec.site_id.as_str()) {
            return Err(Error::ShapeMismatch(format!(
                "{CLUSTERS} does not line up with {CLEANED}; rerun the cluster stage"
            )));
        }
        ids.push(parse_field(row.get(4), CLUSTERS)?);
    }
    if ids.len() != records.len() {
        return Err(Error::ShapeMismatch(format!(
            "{CLUSTERS} has {} rows but {CLEANED} has {}",
            ids.len(),
            records.len()
        )));
    }
    Ok(ids)
}

fn parse_field<T: std::str::FromStr>(cell: Option<&str>, file: &str) -> Result<T> {
    cell.and_then(|c| c.parse().ok())
        .ok_or_else(|| Error::ShapeMismatch(format!("unreadable value {cell:?} in {file}")))
}

// ---- train ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureTable {
    pub site_ids: Vec<String>,
    pub vectors: Vec<FeatureVector>,
    pub labels: Vec<LabelSet>,
    pub dropped: Vec<String>,
    pub provider_fallback_used: bool,
}

impl FeatureTable {
    fn prepared(self) -> Prepared {
        Prepared {
            site_ids: self.site_ids,
            vectors: self.vectors,
            labels: self.labels,
            dropped: self.dropped,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainedPattern {
    pub pattern: Pattern,
    pub learning_rate: f64,
    pub n_estimators: usize,
    pub cv_accuracy: Option<f64>,
    pub small_classes: Vec<usize>,
    pub degenerate: bool,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainSummary {
    pub seed: u64,
    pub train_fraction: Fraction,
    pub split_digest: String,
    pub train_ids: Vec<usize>,
    pub test_ids: Vec<usize>,
    pub train_site_ids: Vec<String>,
    pub columns: Vec<String>,
    pub imputation: Imputation,
    pub patterns: Vec<TrainedPattern>,
}

pub fn train(ctx: &Context) -> Result<String> {
    let records = ctx.cleaned_records()?;
    let ids = cluster_ids(ctx, &records)?;
    let lexicon = ctx.cfg.lexicon()?;
    let (prepared, fallback) = ctx.provider_run(|p| prepare(&records, &ids, &lexicon, p))?;
    let (split, matrix) = split_and_encode(&prepared, ctx.cfg.train_fraction, ctx.cfg.seed)?;
    let models = train_all(&matrix, &prepared.labels, &split, &ctx.cfg.grid, ctx.cfg.seed)?;

    ctx.write_json(
        FEATURES,
        &FeatureTable {
            site_ids: prepared.site_ids.clone(),
            vectors: prepared.vectors.clone(),
            labels: prepared.labels.clone(),
            dropped: prepared.dropped.clone(),
            provider_fallback_used: fallback,
        },
    )?;
    for m in &models {
        ctx.write_json(&model_file(m.pattern), m)?;
    }
    let summary = TrainSummary {
        seed: ctx.cfg.seed,
        train_fraction: ctx.cfg.train_fraction,
        split_digest: split_digest(&split),
        train_ids: split.train_ids.clone(),
        test_ids: split.test_ids.clone(),
        train_site_ids: split.train_ids.iter().map(|&i| prepared.site_ids[i].clone()).collect(),
        columns: matrix.column_spec.iter().map(|c| c.name()).collect(),
        imputation: matrix.imputation_values.clone(),
        patterns: models
            .iter()
            .map(|m| TrainedPattern {
                pattern: m.pattern,
                learning_rate: m.learning_rate,
                n_estimators: m.n_estimators,
                cv_accuracy: m.cv_accuracy,
                small_classes: m.small_classes.clone(),
                degenerate: m.degenerate,
            })
            .collect(),
    };
    ctx.write_json(TRAIN_SUMMARY, &summary)?;
    let chosen: Vec<String> = models
        .iter()
        .map(|m| format!("{}=({}, {})", m.pattern.key(), m.learning_rate, m.n_estimators))
        .collect();
    Ok(format!(
        "train: {} training rows, {} columns; {}",
        split.train_ids.len(),
        matrix.n_columns(),
        chosen.join(" ")
    ))
}

/// Loads the five model files of an output directory, checking format
/// versions.
pub fn load_models(out_dir: &Path) -> Result<Vec<PatternModel>> {
    Pattern::ALL
        .iter()
        .map(|&p| {
            let path = out_dir.join(model_file(p));
            let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
            let a: Artifact<serde_json::Value> = serde_json::from_str(&text)?;
            PatternModel::from_json(&a.content.to_string())
        })
        .collect()
}

// ---- evaluate ----

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ReportFile {
    pub report: EvaluationReport,
    /// Random-forest importances fitted on the training rows.
    pub importances: Vec<PatternImportance>,
}

pub fn evaluate_stage(ctx: &Context) -> Result<String> {
    let table: FeatureTable = ctx.read_json(FEATURES)?.content;
    let prepared = table.prepared();
    let split = split_train_test(prepared.vectors.len(), ctx.cfg.train_fraction, ctx.cfg.seed)?;
    let matrix = encode_features(&prepared.vectors, &split.train_ids)?;
    let models = load_models(&ctx.cfg.output_dir)?;
    let report = evaluate(&models, &matrix, &prepared.labels, &split)?;
    let importances = importance_report(&matrix, &prepared.labels, &split.train_ids, FOREST_TREES, ctx.cfg.seed)?;
    let multi = multi_seed(&prepared, ctx.cfg.train_fraction, &ctx.cfg.grid, ctx.cfg.seed, ctx.cfg.seeds_count)?;

    let mut w = ctx.csv(ACCURACY)?;
    w.write_record([
        "pattern",
        "name",
        "weighted_accuracy",
        "majority_baseline",
        "published_accuracy",
        "learning_rate",
        "n_estimators",
        "cv_accuracy",
    ])?;
    for r in &report.patterns {
        w.write_record([
            r.pattern.key(),
            r.name.as_str(),
            &num(r.weighted_accuracy),
            &num(r.majority_baseline),
            &num(r.published_accuracy),
            &num(r.learning_rate),
            &r.n_estimators.to_string(),
            &opt(r.cv_accuracy),
        ])?;
    }
    w.flush().map_err(|e| Error::io(ctx.path(ACCURACY), e))?;

    let mut w = ctx.csv(CONFUSION)?;
    w.write_record(["pattern", "actual", "predicted_0", "predicted_1", "predicted_2", "count_0", "count_1", "count_2"])?;
    for r in &report.patterns {
        for (actual, (row, counts)) in r.confusion.rows.iter().zip(&r.confusion.counts).enumerate() {
            let mut rec = vec![r.pattern.key().to_string(), actual.to_string()];
            rec.extend(row.iter().map(|&v| num(v)));
            rec.extend(counts.iter().map(|c| c.to_string()));
            w.write_record(&rec)?;
        }
    }
    w.flush().map_err(|e| Error::io(ctx.path(CONFUSION), e))?;

    let mut w = ctx.csv(IMPORTANCES)?;
    w.write_record(["pattern", "level", "name", "importance"])?;
    for pi in &importances {
        for (level, list) in [("feature", &pi.features), ("column", &pi.columns)] {
            for nv in list {
                w.write_record([pi.pattern.key(), level, nv.name.as_str(), &num(nv.value)])?;
            }
        }
    }
    w.flush().map_err(|e| Error::io(ctx.path(IMPORTANCES), e))?;

    write_multiseed(ctx, &multi)?;
    let summary: Vec<String> = report
        .patterns
        .iter()
        .map(|r| format!("{}={:.3}", r.pattern.key(), r.weighted_accuracy))
        .collect();
    ctx.write_json(REPORT, &ReportFile { report, importances })?;
    Ok(format!("evaluate: {}; {} seeds summarised", summary.join(" "), multi.seeds.len()))
}

fn write_multiseed(ctx: &Context, multi: &MultiSeedSummary) -> Result<()> {
    ctx.write_json(MULTISEED, multi)?;
    let mut w = ctx.csv(MULTISEED_CSV)?;
    w.write_record(["pattern", "seed", "weighted_accuracy", "majority_baseline"])?;
    for sp in &multi.patterns {
        for ((s, a), b) in multi.seeds.iter().zip(&sp.accuracies).zip(&sp.baselines) {
            w.write_record([sp.pattern.key(), &s.to_string(), &num(*a), &num(*b)])?;
        }
    }
    w.flush().map_err(|e| Error::io(ctx.path(MULTISEED_CSV), e))
}

/// Reads `multiseed.json` from an output directory.
pub fn read_multiseed(out_dir: &Path) -> Result<MultiSeedSummary> {
    let p = out_dir.join(MULTISEED);
    let text = std::fs::read_to_string(&p).map_err(|e| Error::io(&p, e))?;
    let a: Artifact<MultiSeedSummary> = serde_json::from_str(&text)?;
    Ok(a.content)
}

pub fn run_stage(ctx: &Context, stage: Stage) -> Result<String> {
    match stage {
        Stage::Clean => clean(ctx),
        Stage::Cluster => cluster(ctx),
        Stage::Train => train(ctx),
        Stage::Evaluate => evaluate_stage(ctx),
    }
}
