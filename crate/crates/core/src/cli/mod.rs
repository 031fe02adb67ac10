//! Command-line front end.
//!
//! Exit codes: 0 success, 2 input schema, 3 clustering, 4 model/split
//! mismatch, 5 refusal to overwrite, 1 anything else (including usage
//! errors).

mod config;
mod stages;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

pub use config::{ProviderKind, RunConfig, CONFIG_FILE};
pub use stages::{
    load_models, model_file, read_histogram, read_multiseed, Artifact, CentroidFile, Context, FeatureTable,
    OutputLock, Provenance, ReportFile, Stage, TrainSummary, TrainedPattern,
};

use crate::dataset::{write_corpus, Fraction};
use crate::error::{Error, Result};
use crate::synthetic::{synthetic_corpus_sized, SYNTHETIC_SIZE};

#[derive(Debug, Parser)]
#[command(name = "darkbanner", version, about = "Dark-pattern detection in cookie banners")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Load and normalise the raw corpus; write labels and their histogram.
    Clean(RunArgs),
    /// Cluster the "not yes" phrases and write plot coordinates.
    Cluster(RunArgs),
    /// Grid-search and fit one boosted model per pattern.
    Train(RunArgs),
    /// Score the models on the test split and summarise several seeds.
    Evaluate(RunArgs),
    /// clean, cluster, train and evaluate in sequence.
    RunAll(RunArgs),
    /// Write a synthetic corpus in the input schema.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct RunArgs {
    /// Config file of `key = value` lines; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Raw corpus CSV.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of seeds in the multi-seed summary.
    #[arg(long)]
    seeds: Option<usize>,
    /// Number of phrase clusters.
    #[arg(long)]
    k: Option<usize>,
    /// Training share, as `a/b` or a decimal.
    #[arg(long)]
    train_fraction: Option<Fraction>,
    /// Comma-separated learning rates.
    #[arg(long)]
    grid_rates: Option<String>,
    /// Comma-separated estimator counts.
    #[arg(long)]
    grid_estimators: Option<String>,
    #[arg(long)]
    cv_folds: Option<usize>,
    /// Sentiment lexicon (`term<TAB>valence` lines).
    #[arg(long)]
    lexicon: Option<PathBuf>,
    /// Column map (`field = header` lines) for differently named inputs.
    #[arg(long)]
    columns: Option<PathBuf>,
    #[arg(long, value_enum)]
    provider: Option<ProviderKind>,
    /// Fall back to the offline provider when the external one fails.
    #[arg(long)]
    provider_fallback: bool,
    /// Overwrite existing outputs.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    /// Destination CSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = SYNTHETIC_SIZE)]
    size: usize,
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    /// Defaults, then the `--config` file (or the one saved in the output
    /// directory by an earlier stage), then flags.
    fn resolve(&self, use_saved: bool) -> Result<RunConfig> {
        let mut cfg = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(out) = &self.out {
            cfg.output_dir = out.clone();
        }
        let saved = cfg.output_dir.join(CONFIG_FILE);
        if self.config.is_none() && use_saved && saved.exists() {
            let out = cfg.output_dir.clone();
            cfg = RunConfig::load(&saved)?;
            cfg.output_dir = out;
        }
        let mut set = |k: &str, v: Option<String>| match v {
            Some(v) => cfg.set(k, &v),
            None => Ok(()),
        };
        let path = |p: &Option<PathBuf>| p.as_ref().map(|p| p.display().to_string());
        set("input", path(&self.input))?;
        set("seed", self.seed.map(|v| v.to_string()))?;
        set("seeds", self.seeds.map(|v| v.to_string()))?;
        set("k", self.k.map(|v| v.to_string()))?;
        set("train-fraction", self.train_fraction.map(|v| v.to_string()))?;
        set("grid-rates", self.grid_rates.clone())?;
        set("grid-estimators", self.grid_estimators.clone())?;
        set("cv-folds", self.cv_folds.map(|v| v.to_string()))?;
        set("lexicon", path(&self.lexicon))?;
        set("columns", path(&self.columns))?;
        set("provider", self.provider.map(|p| p.as_str().to_string()))?;
        if self.provider_fallback {
            cfg.provider_fallback = true;
        }
        Ok(cfg)
    }
}

fn run_stages(args: &RunArgs, stages: &[Stage]) -> Result<()> {
    let use_saved = stages[0] != Stage::Clean;
    let cfg = args.resolve(use_saved)?;
    let ctx = Context::new(cfg, args.force)?;
    let _lock = OutputLock::acquire(&ctx.cfg.output_dir)?;
    ctx.check_outputs(stages)?;
    for &s in stages {
        println!("{}", stages::run_stage(&ctx, s)?);
    }
    Ok(())
}

fn synth(args: &SynthArgs) -> Result<()> {
    if args.out.exists() && !args.force {
        return Err(Error::Overwrite(args.out.clone()));
    }
    let records = synthetic_corpus_sized(args.seed, args.size);
    let file = std::fs::File::create(&args.out).map_err(|e| Error::io(&args.out, e))?;
    write_corpus(
        std::io::BufWriter::new(file),
        &records,
        &[format!("synthetic corpus, seed={} size={}", args.seed, args.size)],
    )?;
    println!("synth: {} records -> {}", records.len(), args.out.display());
    Ok(())
}

/// Parses `args` (program name first), runs the command and returns the
/// process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    let result = match &cli.command {
        Command::Clean(a) => run_stages(a, &[Stage::Clean]),
        Command::Cluster(a) => run_stages(a, &[Stage::Cluster]),
        Command::Train(a) => run_stages(a, &[Stage::Train]),
        Command::Evaluate(a) => run_stages(a, &[Stage::Evaluate]),
        Command::RunAll(a) => run_stages(a, &Stage::ALL),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => 0,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}
