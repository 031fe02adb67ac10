use std::collections::HashMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::porter;
use super::tokenize::{stem_tokens, tokenize};
use crate::error::{Error, Result};

const SHIPPED_LEXICON: &str = include_str!("../../data/lexicon.tsv");

/// Valence and total affect of a piece of text.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SentimentResult {
    /// In `[-1, 1]`.
    pub score: f64,
    /// `>= 0`.
    pub magnitude: f64,
}

impl SentimentResult {
    pub fn is_valid(&self) -> bool {
        self.score.is_finite()
            && (-1.0..=1.0).contains(&self.score)
            && self.magnitude.is_finite()
            && self.magnitude >= 0.0
    }
}

/// Stem-keyed valence map.
#[derive(Debug, Clone, PartialEq)]
pub struct Lexicon {
    version: u32,
    valences: HashMap<String, f64>,
}

impl Lexicon {
    /// The lexicon shipped with the crate.
    pub fn shipped() -> Self {
        Lexicon::parse(SHIPPED_LEXICON).expect("shipped lexicon is valid")
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Lexicon::parse(&text)
    }

    /// Parses `term<TAB>valence` lines. `#` lines are comments; a
    /// `# version: N` comment sets the version.
    pub fn parse(text: &str) -> Result<Self> {
        let mut version = 0;
        let mut valences = HashMap::new();
        for (i, line) in text.lines().enumerate() {
            if let Some(rest) = line.strip_prefix('#') {
                if let Some(v) = rest.trim().strip_prefix("version:") {
                    version = v
                        .trim()
                        .parse()
                        .map_err(|_| Error::InvalidLexicon(format!("line {}: bad version", i + 1)))?;
                }
                continue;
            }
            if line.trim().is_empty() {
                continue;
            }
            let bad = |what: &str| Error::InvalidLexicon(format!("line {}: {what}", i + 1));
            let (term, valence) = line.split_once('\t').ok_or_else(|| bad("expected term<TAB>valence"))?;
            let valence: f64 = valence.trim().parse().map_err(|_| bad("valence is not a number"))?;
            if !valence.is_finite() || !(-1.0..=1.0).contains(&valence) {
                return Err(bad("valence outside [-1, 1]"));
            }
            let tokens = tokenize(term);
            let [token] = tokens.as_slice() else {
                return Err(bad("term must be a single word"));
            };
            valences.entry(porter::stem(token)).or_insert(valence);
        }
        Ok(Lexicon { version, valences })
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<Self> {
        let text: String = pairs
            .into_iter()
            .map(|(t, v)| format!("{t}\t{v}\n"))
            .collect();
        Lexicon::parse(&text)
    }

    pub fn version(&self) -> u32 {
        self.version
    }

    pub fn len(&self) -> usize {
        self.valences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.valences.is_empty()
    }

    pub fn valence(&self, stem: &str) -> Option<f64> {
        self.valences.get(stem).copied()
    }
}

/// Offline scorer: mean valence of matched stems (clamped to `[-1, 1]`) and
/// the sum of their absolute valences.
pub fn lexicon_sentiment(text: &str, lexicon: &Lexicon) -> SentimentResult {
    let stems = stem_tokens(&tokenize(text));
    let (sum, abs, count) = stems
        .as_slice()
        .iter()
        .filter_map(|s| lexicon.valence(s))
        .fold((0.0, 0.0, 0usize), |(s, a, n), v| (s + v, a + v.abs(), n + 1));
    SentimentResult {
        score: (sum / count.max(1) as f64).clamp(-1.0, 1.0),
        magnitude: abs,
    }
}
