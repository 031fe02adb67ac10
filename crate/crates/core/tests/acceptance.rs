//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! Criteria that need the annotated 300-site corpus look for it in
//! `DARKBANNER_CORPUS`, then `data/banner_data.csv` at the workspace root or
//! in this crate. `DARKBANNER_COLUMNS` may name a column map for it. Without
//! the corpus those criteria print FAIL with a BLOCKED note.
//!
//! The process exits 0 regardless unless `ACCEPTANCE_STRICT=1` is set, so
//! the remaining test targets still run under `cargo test`.

#[allow(dead_code, unused_imports)]
#[path = "oracles_geometry.rs"]
mod oracles_geometry;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::Instant;

use darkbanner::cli::{load_models, read_histogram, read_multiseed};
use darkbanner::cluster::canonical_phrase;
use darkbanner::dataset::{clean_record, load_raw_csv_with, write_corpus, BannerRecord, ColumnMap, Fraction, Pattern};
use darkbanner::learn::HyperGrid;
use darkbanner::pipeline::{cluster_records, prepare, run_seed, PatternModel, Prepared};
use darkbanner::synthetic::synthetic_corpus;
use darkbanner::text::{Lexicon, TextProvider};

const BIN: &str = env!("CARGO_BIN_EXE_darkbanner");

const EXPECTED_HISTOGRAM: [[usize; 3]; 5] = [[229, 68, 3], [50, 121, 129], [186, 114, 0], [55, 109, 136], [181, 88, 31]];

struct Outcome {
    pass: bool,
    detail: String,
}

fn pass(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: true,
        detail: detail.into(),
    }
}

fn fail(detail: impl Into<String>) -> Outcome {
    Outcome {
        pass: false,
        detail: detail.into(),
    }
}

struct Corpus {
    path: PathBuf,
    columns: Option<PathBuf>,
}

fn find_corpus() -> Option<Corpus> {
    let manifest = Path::new(env!("CARGO_MANIFEST_DIR"));
    let candidates = [
        std::env::var_os("DARKBANNER_CORPUS").map(PathBuf::from),
        Some(manifest.join("../../data/banner_data.csv")),
        Some(manifest.join("data/banner_data.csv")),
    ];
    let path = candidates.into_iter().flatten().find(|p| p.is_file())?;
    Some(Corpus {
        path,
        columns: std::env::var_os("DARKBANNER_COLUMNS").map(PathBuf::from),
    })
}

fn blocked(what: &str) -> String {
    format!("BLOCKED: annotated corpus not found (set DARKBANNER_CORPUS); {what}")
}

fn darkbanner(args: &[&str]) -> Result<(), String> {
    let o = Command::new(BIN).args(args).output().map_err(|e| e.to_string())?;
    if o.status.success() {
        Ok(())
    } else {
        Err(format!("exit {:?}: {}", o.status.code(), String::from_utf8_lossy(&o.stderr).trim()))
    }
}

fn corpus_args<'a>(c: &'a Corpus, args: &mut Vec<&'a str>) {
    args.extend(["--input", c.path.to_str().unwrap()]);
    if let Some(cols) = &c.columns {
        args.extend(["--columns", cols.to_str().unwrap()]);
    }
}

fn histogram_criterion(corpus: Option<&Corpus>, tmp: &Path) -> Outcome {
    let Some(c) = corpus else {
        return fail(blocked("expected (0,1,2) counts per pattern cannot be recomputed"));
    };
    let out = tmp.join("hist");
    let mut args = vec!["clean", "--out", out.to_str().unwrap(), "--force"];
    corpus_args(c, &mut args);
    let start = Instant::now();
    if let Err(e) = darkbanner(&args) {
        return fail(format!("clean failed: {e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let h = match read_histogram(&out) {
        Ok(h) => h,
        Err(e) => return fail(e.to_string()),
    };
    let got: Vec<[usize; 3]> = Pattern::ALL.iter().map(|&p| h.get(p)).collect();
    let exact = got == EXPECTED_HISTOGRAM;
    let detail = format!("{got:?} in {secs:.2} s");
    if exact && secs < 5.0 {
        pass(detail)
    } else {
        fail(format!("{detail}; expected {EXPECTED_HISTOGRAM:?} under 5 s"))
    }
}

fn accuracy_criterion(corpus: Option<&Corpus>, tmp: &Path, synthetic_run: Option<(&Path, f64)>) -> Outcome {
    let Some(c) = corpus else {
        let note = match synthetic_run.map(|(dir, secs)| (read_multiseed(dir), secs)) {
            Some((Ok(m), secs)) => {
                let means: Vec<String> = m.patterns.iter().map(|p| format!("{:.3}", p.mean)).collect();
                format!(
                    "synthetic stand-in ran {} seeds end to end in {secs:.1} s (means {})",
                    m.seeds.len(),
                    means.join(", ")
                )
            }
            _ => "synthetic stand-in unavailable".into(),
        };
        return fail(blocked(&note));
    };
    let out = tmp.join("accuracy");
    let mut args = vec!["run-all", "--out", out.to_str().unwrap(), "--force"];
    corpus_args(c, &mut args);
    let start = Instant::now();
    if let Err(e) = darkbanner(&args) {
        return fail(format!("run-all failed: {e}"));
    }
    let secs = start.elapsed().as_secs_f64();
    let m = match read_multiseed(&out) {
        Ok(m) => m,
        Err(e) => return fail(e.to_string()),
    };
    let parts: Vec<String> = m
        .patterns
        .iter()
        .map(|p| format!("{} {:.3}±{:.3} (ref {:.3})", p.pattern.key(), p.mean, p.std, p.published_accuracy))
        .collect();
    let within = m.patterns.iter().all(|p| p.within_tolerance);
    let floor = m.patterns.iter().all(|p| p.above_chance);
    let detail = format!(
        "{}; within ±{}: {within}; above 1/3: {floor}; {secs:.1} s",
        parts.join(", "),
        m.tolerance
    );
    if within && floor && secs < 60.0 {
        pass(detail)
    } else {
        fail(detail)
    }
}

fn clustering_check(records: &[BannerRecord]) -> Result<String, String> {
    let c = cluster_records(records, 6, 42, &TextProvider::OfflineDefault).map_err(|e| e.to_string())?;
    let sizes = c.cluster_sizes();
    if sizes.len() != 6 || sizes.contains(&0) {
        return Err(format!("cluster sizes {sizes:?}"));
    }
    let mut seen: BTreeMap<String, usize> = BTreeMap::new();
    for a in &c.assignments {
        let key = canonical_phrase(&a.phrase);
        if let Some(&id) = seen.get(&key) {
            if id != a.cluster_id {
                return Err(format!("`{key}` appears in clusters {id} and {}", a.cluster_id));
            }
        }
        seen.insert(key, a.cluster_id);
    }
    Ok(format!("sizes {sizes:?}, {} distinct stemmed phrases", seen.len()))
}

fn clustering_criterion(corpus: Option<&Corpus>) -> Outcome {
    let Some(c) = corpus else {
        let records: Vec<BannerRecord> = synthetic_corpus(42).iter().map(clean_record).collect();
        let note = match clustering_check(&records) {
            Ok(d) => format!("synthetic stand-in: {d}"),
            Err(e) => format!("synthetic stand-in failed: {e}"),
        };
        return fail(blocked(&note));
    };
    let columns = match &c.columns {
        Some(p) => ColumnMap::from_file(p),
        None => Ok(ColumnMap::default()),
    };
    let loaded = columns.and_then(|cols| load_raw_csv_with(&c.path, &cols));
    match loaded {
        Ok(corpus) => {
            let records: Vec<BannerRecord> = corpus.records.iter().map(clean_record).collect();
            match clustering_check(&records) {
                Ok(d) => pass(d),
                Err(e) => fail(e),
            }
        }
        Err(e) => fail(e.to_string()),
    }
}

fn oracle_criterion() -> Outcome {
    let checks: [(&str, fn()); 13] = [
        ("cart-vs-exhaustive", oracles_trees::cart_matches_exhaustive_split_oracle),
        ("kmeans-vs-enumeration", oracles_geometry::kmeans_matches_brute_force_partitions),
        ("pca-vs-jacobi", oracles_geometry::pca_matches_jacobi_oracle),
        ("pca-5-point", oracles_geometry::pca_small_random_set_against_oracle),
        ("weighted-accuracy", oracles_metrics::weighted_accuracy_equals_micro_accuracy_on_1000_pairs),
        ("gbt-deviance", oracles_trees::gbt_deviance_non_increasing_on_fixtures),
        ("gbt-prior-limit", oracles_trees::gbt_vanishing_rate_equals_prior_predictor),
        ("gbt-probabilities", oracles_trees::gbt_probabilities_sum_to_one),
        ("gbt-vs-json-walk", oracles_trees::gbt_matches_json_walking_oracle),
        ("importance-sum", oracles_trees::importances_sum_to_one_and_constant_scores_zero),
        ("importance-informative", oracles_trees::informative_feature_dominates_importance),
        ("forest-oob", oracles_trees::forest_oob_accuracy_on_separable_set),
        ("embedding-hand-hash", oracles_geometry::embedding_matches_hand_hashing_and_word_order_matters),
    ];
    let failed: Vec<&str> = checks
        .iter()
        .filter(|(_, f)| catch_unwind(AssertUnwindSafe(f)).is_err())
        .map(|(name, _)| *name)
        .collect();
    if failed.is_empty() {
        pass(format!("{} oracle checks", checks.len()))
    } else {
        fail(format!("failed: {}", failed.join(", ")))
    }
}

fn determinism_criterion(tmp: &Path) -> (Outcome, Option<f64>) {
    let input = tmp.join("synthetic.csv");
    let file = std::fs::File::create(&input).unwrap();
    write_corpus(file, &synthetic_corpus(42), &["synthetic".into()]).unwrap();
    let mut secs = None;
    for out in ["det-a", "det-b"] {
        let dir = tmp.join(out);
        let start = Instant::now();
        let args = ["run-all", "--input", input.to_str().unwrap(), "--out", dir.to_str().unwrap(), "--force"];
        if let Err(e) = darkbanner(&args) {
            return (fail(format!("run-all failed: {e}")), None);
        }
        secs.get_or_insert(start.elapsed().as_secs_f64());
    }
    let a = tree(&tmp.join("det-a"));
    let b = tree(&tmp.join("det-b"));
    if a.keys().ne(b.keys()) {
        return (fail("different file sets"), secs);
    }
    let differing: Vec<String> = a
        .iter()
        .filter(|(k, v)| b[*k] != **v)
        .map(|(k, _)| k.display().to_string())
        .collect();
    if differing.is_empty() {
        (pass(format!("{} output files byte-identical (synthetic corpus, default config)", a.len())), secs)
    } else {
        (fail(format!("differing: {}", differing.join(", "))), secs)
    }
}

fn tree(dir: &Path) -> BTreeMap<PathBuf, Vec<u8>> {
    let mut out = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.insert(p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap());
            }
        }
    }
    out
}

fn prepared_from(records: &[BannerRecord]) -> Result<Prepared, String> {
    let provider = TextProvider::OfflineDefault;
    let clusters = cluster_records(records, 6, 42, &provider).map_err(|e| e.to_string())?;
    let ids: Vec<usize> = clusters.assignments.iter().map(|a| a.cluster_id).collect();
    prepare(records, &ids, &Lexicon::shipped(), &provider).map_err(|e| e.to_string())
}

fn serialization_criterion(corpus: Option<&Corpus>, tmp: &Path, det_dir: &Path) -> Outcome {
    let (records, source): (Vec<BannerRecord>, &str) = match corpus {
        Some(c) => match load_raw_csv_with(&c.path, &ColumnMap::default()) {
            Ok(k) => (k.records.iter().map(clean_record).collect(), "corpus"),
            Err(e) => return fail(e.to_string()),
        },
        None => (synthetic_corpus(42).iter().map(clean_record).collect(), "synthetic corpus"),
    };
    let prepared = match prepared_from(&records) {
        Ok(p) => p,
        Err(e) => return fail(e),
    };
    let run = match run_seed(&prepared, Fraction::two_thirds(), &HyperGrid::default(), 42) {
        Ok(r) => r,
        Err(e) => return fail(e.to_string()),
    };
    let test_x = run.matrix.select(&run.split.test_ids);
    let dir = tmp.join("models");
    std::fs::create_dir_all(&dir).unwrap();
    let mut compared = 0;
    for m in &run.models {
        let path = dir.join(format!("{}.json", m.pattern.key()));
        std::fs::write(&path, m.to_json().unwrap()).unwrap();
        let back = match PatternModel::from_json(&std::fs::read_to_string(&path).unwrap()) {
            Ok(b) => b,
            Err(e) => return fail(e.to_string()),
        };
        for row in &test_x {
            if back.model.predict(row).unwrap() != m.model.predict(row).unwrap() {
                return fail(format!("{} prediction changed after reload", m.pattern.key()));
            }
            compared += 1;
        }
    }
    // The CLI's model files must reload to the same models too.
    let mut cli_note = String::new();
    if corpus.is_none() {
        match load_models(det_dir) {
            Ok(models) if models == run.models => cli_note = "; CLI model files reload equal".into(),
            Ok(_) => return fail("CLI model files differ from in-process models"),
            Err(e) => return fail(format!("CLI model files: {e}")),
        }
    }
    pass(format!(
        "{compared} predictions identical over {} test rows × 5 models ({source}){cli_note}",
        test_x.len()
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temp dir");
    let corpus = find_corpus();
    let corpus = corpus.as_ref();

    let (determinism, det_secs) = determinism_criterion(tmp.path());
    let det_dir = tmp.path().join("det-a");
    let results = [
        ("label-histogram", histogram_criterion(corpus, tmp.path())),
        (
            "accuracy-10-seeds",
            accuracy_criterion(corpus, tmp.path(), det_secs.map(|s| (det_dir.as_path(), s))),
        ),
        ("clustering-structure", clustering_criterion(corpus)),
        ("oracle-suites", oracle_criterion()),
        ("determinism", determinism),
        ("serialization", serialization_criterion(corpus, tmp.path(), &det_dir)),
    ];
    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("acceptance: {} passed, {failed} failed", results.len() - failed);
    if failed > 0 && std::env::var("ACCEPTANCE_STRICT").is_ok_and(|v| v == "1") {
        std::process::exit(1);
    }
}
