use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

/// The five dark-pattern categories annotated for every banner.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pattern {
    Nagging,
    Obstruction,
    Sneaking,
    InterfaceInterference,
    ForcedAction,
}

impl Pattern {
    pub const ALL: [Pattern; 5] = [
        Pattern::Nagging,
        Pattern::Obstruction,
        Pattern::Sneaking,
        Pattern::InterfaceInterference,
        Pattern::ForcedAction,
    ];

    /// Snake-case key used in column names, file names and JSON.
    pub fn key(self) -> &'static str {
        match self {
            Pattern::Nagging => "nagging",
            Pattern::Obstruction => "obstruction",
            Pattern::Sneaking => "sneaking",
            Pattern::InterfaceInterference => "interface_interference",
            Pattern::ForcedAction => "forced_action",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Pattern {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Pattern::Nagging => "Nagging",
            Pattern::Obstruction => "Obstruction",
            Pattern::Sneaking => "Sneaking",
            Pattern::InterfaceInterference => "Interface Interference",
            Pattern::ForcedAction => "Forced action",
        };
        f.write_str(name)
    }
}

/// A yes/no field that may also be unknown.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TriState {
    Yes,
    No,
    #[default]
    Unknown,
}

impl TriState {
    pub fn as_str(self) -> &'static str {
        match self {
            TriState::Yes => "yes",
            TriState::No => "no",
            TriState::Unknown => "unknown",
        }
    }

    pub fn as_binary(self) -> Option<f64> {
        match self {
            TriState::Yes => Some(1.0),
            TriState::No => Some(0.0),
            TriState::Unknown => None,
        }
    }
}

/// The two reviewers' presence flags for one pattern. `None` means the
/// reviewer left the cell empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct ReviewerPair {
    pub a: Option<bool>,
    pub b: Option<bool>,
}

impl ReviewerPair {
    pub fn new(a: bool, b: bool) -> Self {
        ReviewerPair {
            a: Some(a),
            b: Some(b),
        }
    }
}

/// One row of the annotated banner corpus.
///
/// Tri-state fields keep both the original text (`*_raw`) and the parsed
/// value; the parsed value is only meaningful after cleaning.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct BannerRecord {
    pub site_id: String,
    pub country: String,
    pub site_type: String,
    pub widget_level_raw: String,
    pub not_yes_text: String,
    pub location_raw: String,
    pub content_blocking_raw: String,
    pub content_blocking: TriState,
    pub options_words_count: Option<u32>,
    pub clicks_to_reject_all: Option<u32>,
    pub not_yes_visibility_raw: String,
    pub clarity_comment: String,
    pub cookie_listing_comment: String,
    pub third_party_raw: String,
    pub works_after_reject_raw: String,
    pub works_after_reject: TriState,
    /// Indexed by [`Pattern::index`].
    pub annotations: [ReviewerPair; 5],
    /// Reviewer comments split off recognised values, keyed by field name.
    pub side_notes: BTreeMap<String, String>,
}

impl BannerRecord {
    pub fn annotation(&self, pattern: Pattern) -> ReviewerPair {
        self.annotations[pattern.index()]
    }
}

/// Resolved label codes: 0 = none, 1 = possible, 2 = confirmed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LabelSet {
    pub nagging: u8,
    pub obstruction: u8,
    pub sneaking: u8,
    pub interface_interference: u8,
    pub forced_action: u8,
}

impl LabelSet {
    pub fn get(&self, pattern: Pattern) -> u8 {
        match pattern {
            Pattern::Nagging => self.nagging,
            Pattern::Obstruction => self.obstruction,
            Pattern::Sneaking => self.sneaking,
            Pattern::InterfaceInterference => self.interface_interference,
            Pattern::ForcedAction => self.forced_action,
        }
    }

    pub fn set(&mut self, pattern: Pattern, code: u8) {
        debug_assert!(code <= 2);
        let slot = match pattern {
            Pattern::Nagging => &mut self.nagging,
            Pattern::Obstruction => &mut self.obstruction,
            Pattern::Sneaking => &mut self.sneaking,
            Pattern::InterfaceInterference => &mut self.interface_interference,
            Pattern::ForcedAction => &mut self.forced_action,
        };
        *slot = code;
    }
}
