//! Run configuration and its flat `key = value` file format.
//!
//! Keys are the long flag names without dashes in front:
//!
//! ```text
//! input = data/banner_data.csv
//! out = out
//! seed = 42
//! seeds = 10
//! k = 6
//! train-fraction = 2/3
//! grid-rates = 0.15,0.1,0.05,0.01,0.005,0.001
//! grid-estimators = 10,15,20,25,30,35,40
//! cv-folds = 3
//! provider = offline
//! provider-fallback = false
//! ```
//!
//! Optional keys: `lexicon`, `columns`, `text-endpoint`, `text-key`.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::cluster::DEFAULT_CLUSTERS;
use crate::dataset::{tristate_table_version, ColumnMap, Fraction};
use crate::error::{Error, Result};
use crate::learn::HyperGrid;
use crate::text::{ExternalConfig, Lexicon, TextProvider, ENDPOINT_ENV, KEY_ENV};

pub const CONFIG_FILE: &str = "config.conf";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum ProviderKind {
    #[default]
    Offline,
    External,
}

impl ProviderKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProviderKind::Offline => "offline",
            ProviderKind::External => "external",
        }
    }
}

impl FromStr for ProviderKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "offline" | "offline-default" => Ok(ProviderKind::Offline),
            "external" => Ok(ProviderKind::External),
            other => Err(Error::Config(format!("unknown provider `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub input_csv: Option<PathBuf>,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub seeds_count: usize,
    pub train_fraction: Fraction,
    pub k_clusters: usize,
    pub grid: HyperGrid,
    pub provider: ProviderKind,
    /// Retry a failed external stage with the offline provider.
    pub provider_fallback: bool,
    pub text_endpoint: Option<String>,
    pub text_key: Option<String>,
    pub lexicon: Option<PathBuf>,
    pub columns: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            input_csv: None,
            output_dir: PathBuf::from("out"),
            seed: 42,
            seeds_count: 10,
            train_fraction: Fraction::two_thirds(),
            k_clusters: DEFAULT_CLUSTERS,
            grid: HyperGrid::default(),
            provider: ProviderKind::Offline,
            provider_fallback: false,
            text_endpoint: None,
            text_key: None,
            lexicon: None,
            columns: None,
        }
    }
}

fn join<T: ToString>(xs: &[T]) -> String {
    xs.iter().map(T::to_string).collect::<Vec<_>>().join(",")
}

fn parse_list<T: FromStr>(key: &str, v: &str) -> Result<Vec<T>> {
    v.split(',')
        .map(|s| s.trim())
        .filter(|s| !s.is_empty())
        .map(|s| s.parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{s}`"))))
        .collect()
}

fn parse_one<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse().map_err(|_| Error::Config(format!("{key}: cannot parse `{v}`")))
}

impl RunConfig {
    /// Applies one `key = value` pair.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim() {
            "input" => self.input_csv = Some(PathBuf::from(v)),
            "out" => self.output_dir = PathBuf::from(v),
            "seed" => self.seed = parse_one(key, v)?,
            "seeds" => self.seeds_count = parse_one(key, v)?,
            "k" => self.k_clusters = parse_one(key, v)?,
            "train-fraction" => self.train_fraction = v.parse()?,
            "grid-rates" => self.grid.learning_rates = parse_list(key, v)?,
            "grid-estimators" => self.grid.n_estimators_options = parse_list(key, v)?,
            "cv-folds" => self.grid.cv_folds = parse_one(key, v)?,
            "provider" => self.provider = v.parse()?,
            "provider-fallback" => self.provider_fallback = parse_one(key, v)?,
            "text-endpoint" => self.text_endpoint = Some(v.to_string()),
            "text-key" => self.text_key = Some(v.to_string()),
            "lexicon" => self.lexicon = Some(PathBuf::from(v)),
            "columns" => self.columns = Some(PathBuf::from(v)),
            other => return Err(Error::Config(format!("unknown key `{other}`"))),
        }
        Ok(())
    }

    /// Parses a config file body on top of the defaults.
    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        cfg.merge_text(text)?;
        Ok(cfg)
    }

    pub fn merge_text(&mut self, text: &str) -> Result<()> {
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected `key = value`", i + 1)))?;
            self.set(k, v)?;
        }
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        RunConfig::parse(&text)
    }

    fn render(&self, with_paths: bool, with_out: bool, with_key: bool) -> String {
        let mut s = String::new();
        let mut kv = |k: &str, v: &str| {
            let _ = writeln!(s, "{k} = {v}");
        };
        if with_paths {
            if let Some(p) = &self.input_csv {
                kv("input", &p.display().to_string());
            }
        }
        if with_out {
            kv("out", &self.output_dir.display().to_string());
        }
        kv("seed", &self.seed.to_string());
        kv("seeds", &self.seeds_count.to_string());
        kv("k", &self.k_clusters.to_string());
        kv("train-fraction", &self.train_fraction.to_string());
        kv("grid-rates", &join(&self.grid.learning_rates));
        kv("grid-estimators", &join(&self.grid.n_estimators_options));
        kv("cv-folds", &self.grid.cv_folds.to_string());
        kv("provider", self.provider.as_str());
        kv("provider-fallback", &self.provider_fallback.to_string());
        if let Some(e) = &self.text_endpoint {
            kv("text-endpoint", e);
        }
        if with_key {
            if let Some(k) = &self.text_key {
                kv("text-key", k);
            }
        }
        if with_paths {
            if let Some(p) = &self.lexicon {
                kv("lexicon", &p.display().to_string());
            }
            if let Some(p) = &self.columns {
                kv("columns", &p.display().to_string());
            }
        }
        s
    }

    /// The full file form; `parse(to_text())` gives back `self`.
    pub fn to_text(&self) -> String {
        self.render(true, true, true)
    }

    /// The form saved in an output directory: no service key and no `out`,
    /// which the directory itself supplies.
    pub fn to_text_redacted(&self) -> String {
        self.render(true, false, false)
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if self.seeds_count == 0 {
            return Err(Error::Config("seeds must be at least 1".into()));
        }
        if self.k_clusters == 0 {
            return Err(Error::Config("k must be at least 1".into()));
        }
        Ok(())
    }

    pub fn lexicon(&self) -> Result<Lexicon> {
        match &self.lexicon {
            Some(p) => Lexicon::from_file(p),
            None => Ok(Lexicon::shipped()),
        }
    }

    pub fn column_map(&self) -> Result<ColumnMap> {
        match &self.columns {
            Some(p) => ColumnMap::from_file(p),
            None => Ok(ColumnMap::default()),
        }
    }

    /// Endpoint and key fall back to `DARKBANNER_TEXT_ENDPOINT` and
    /// `DARKBANNER_TEXT_KEY`.
    pub fn text_provider(&self) -> Result<TextProvider> {
        match self.provider {
            ProviderKind::Offline => Ok(TextProvider::OfflineDefault),
            ProviderKind::External => {
                let endpoint = self
                    .text_endpoint
                    .clone()
                    .or_else(|| std::env::var(ENDPOINT_ENV).ok())
                    .filter(|e| !e.trim().is_empty())
                    .ok_or_else(|| {
                        Error::Config(format!("external provider needs text-endpoint or {ENDPOINT_ENV}"))
                    })?;
                let mut cfg = ExternalConfig::new(endpoint);
                cfg.key = self
                    .text_key
                    .clone()
                    .or_else(|| std::env::var(KEY_ENV).ok())
                    .filter(|k| !k.is_empty());
                Ok(TextProvider::External(cfg))
            }
        }
    }

    /// Hex SHA-256 over everything that can change an output: the settings
    /// (without paths and the key), the input bytes, and the lexicon and
    /// column-map contents.
    pub fn hash(&self) -> Result<String> {
        let mut h = Sha256::new();
        h.update(b"darkbanner-config\n");
        h.update(self.render(false, false, false).as_bytes());
        let mut file = |label: &str, path: Option<&PathBuf>| -> Result<()> {
            h.update(label.as_bytes());
            match path {
                Some(p) => h.update(std::fs::read(p).map_err(|e| Error::io(p, e))?),
                None => h.update(b"<default>"),
            }
            h.update(b"\n");
            Ok(())
        };
        file("input:", self.input_csv.as_ref())?;
        file("lexicon:", self.lexicon.as_ref())?;
        file("columns:", self.columns.as_ref())?;
        h.update(format!("tristate-table:{}\n", tristate_table_version()).as_bytes());
        Ok(hex::encode(h.finalize()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn defaults_match_reference_configuration() {
        let c = RunConfig::default();
        assert_eq!(c.seed, 42);
        assert_eq!(c.seeds_count, 10);
        assert_eq!(c.k_clusters, 6);
        assert_eq!(c.train_fraction, Fraction::two_thirds());
        assert_eq!(c.grid.n_cells(), 42);
    }

    #[test]
    fn unknown_key_is_rejected() {
        assert!(matches!(RunConfig::parse("colour = blue"), Err(Error::Config(_))));
    }

    #[test]
    fn redacted_text_drops_key() {
        let mut c = RunConfig::default();
        c.text_key = Some("secret".into());
        assert!(c.to_text().contains("secret"));
        assert!(!c.to_text_redacted().contains("secret"));
    }

    #[test]
    fn hash_ignores_output_dir() {
        let a = RunConfig::default();
        let mut b = a.clone();
        b.output_dir = "elsewhere".into();
        assert_eq!(a.hash().unwrap(), b.hash().unwrap());
        b.seed = 43;
        assert_ne!(a.hash().unwrap(), b.hash().unwrap());
    }

    proptest! {
        #[test]
        fn text_round_trip(
            seed in any::<u64>(),
            seeds in 1usize..50,
            k in 1usize..20,
            num in 1u64..9,
            rates in prop::collection::vec(1e-6f64..1.0, 1..5),
            ests in prop::collection::vec(1usize..200, 1..5),
            fallback in any::<bool>(),
            external in any::<bool>(),
        ) {
            let c = RunConfig {
                input_csv: Some("a b/c.csv".into()),
                output_dir: "o".into(),
                seed,
                seeds_count: seeds,
                train_fraction: Fraction::new(num, 10).unwrap(),
                k_clusters: k,
                grid: HyperGrid { learning_rates: rates, n_estimators_options: ests, cv_folds: 4 },
                provider: if external { ProviderKind::External } else { ProviderKind::Offline },
                provider_fallback: fallback,
                text_endpoint: Some("http://127.0.0.1:9/x".into()),
                text_key: Some("k=v".into()),
                lexicon: Some("lex.tsv".into()),
                columns: None,
            };
            prop_assert_eq!(RunConfig::parse(&c.to_text()).unwrap(), c);
        }
    }
}
