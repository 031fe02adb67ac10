//! Cleaning of hand-annotated cells: whitespace and special-character
//! normalisation, tri-state parsing, and separation of reviewer comments from
//! the value they annotate.

use std::collections::HashMap;
use std::sync::OnceLock;

use super::record::{BannerRecord, TriState};

const TRISTATE_TABLE: &str = include_str!("../../data/tristate.tsv");

struct SynonymTable {
    version: u32,
    entries: HashMap<String, TriState>,
}

fn table() -> &'static SynonymTable {
    static TABLE: OnceLock<SynonymTable> = OnceLock::new();
    TABLE.get_or_init(|| parse_table(TRISTATE_TABLE))
}

fn parse_table(text: &str) -> SynonymTable {
    let mut version = 0;
    let mut entries = HashMap::new();
    for line in text.lines() {
        if let Some(rest) = line.strip_prefix('#') {
            if let Some(v) = rest.trim().strip_prefix("version:") {
                version = v.trim().parse().expect("tristate table version");
            }
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let (syn, val) = line.split_once('\t').expect("tristate table line");
        let val = match val.trim() {
            "yes" => TriState::Yes,
            "no" => TriState::No,
            "unknown" => TriState::Unknown,
            other => panic!("bad tristate table value {other:?}"),
        };
        entries.insert(syn.trim().to_string(), val);
    }
    SynonymTable { version, entries }
}

/// Version of the shipped tri-state synonym table.
pub fn tristate_table_version() -> u32 {
    table().version
}

/// Replaces control, format and non-standard whitespace characters with a
/// plain space, collapses runs of whitespace and trims the result.
pub fn normalize_text(s: &str) -> String {
    let mut out = String::with_capacity(s.len());
    let mut pending_space = false;
    for c in s.chars() {
        let blank = c.is_whitespace() || c.is_control() || is_format_char(c);
        if blank {
            pending_space = !out.is_empty();
            continue;
        }
        if pending_space {
            out.push(' ');
            pending_space = false;
        }
        out.push(c);
    }
    out
}

fn is_format_char(c: char) -> bool {
    matches!(c, '\u{200b}'..='\u{200f}' | '\u{2060}' | '\u{feff}' | '\u{00ad}')
}

/// [`normalize_text`] followed by lowercasing.
pub fn normalize_lower(s: &str) -> String {
    normalize_text(s).to_lowercase()
}

/// Splits a cell like `"yes, buttons"` into its value part and the trailing
/// reviewer comment.
pub fn split_value_comment(text: &str) -> (String, Option<String>) {
    match text.find([',', ';', ':', '(']) {
        Some(pos) => {
            let value = trim_punct(&text[..pos]).to_string();
            let comment = text[pos + 1..]
                .trim()
                .trim_end_matches(')')
                .trim()
                .to_string();
            (value, (!comment.is_empty()).then_some(comment))
        }
        None => (trim_punct(text).to_string(), None),
    }
}

fn trim_punct(s: &str) -> &str {
    s.trim()
        .trim_end_matches(['.', '!', '?', ',', ';', ':'])
        .trim()
}

/// Parses the value part of a cell against the synonym table, falling back
/// to its first word.
pub fn parse_tristate(text: &str) -> TriState {
    lookup_tristate(text).unwrap_or(TriState::Unknown)
}

/// Like [`parse_tristate`] but distinguishes "not recognised" (`None`) from
/// an explicit unknown marker.
pub fn lookup_tristate(text: &str) -> Option<TriState> {
    let lowered = normalize_lower(text);
    let (value, _) = split_value_comment(&lowered);
    let entries = &table().entries;
    if let Some(t) = entries.get(value.as_str()) {
        return Some(*t);
    }
    let first = value.split_whitespace().next()?;
    entries.get(trim_punct(first)).copied()
}

const NOTED_FIELDS: [&str; 4] = [
    "widgetlevel",
    "contentblocking",
    "thirdparty",
    "siteworkafterrejectingcoookies",
];

/// Normalises every free-text field of a record. Total and idempotent.
pub fn clean_record(raw: &BannerRecord) -> BannerRecord {
    let mut r = raw.clone();
    r.site_id = normalize_text(&raw.site_id);
    r.country = normalize_text(&raw.country);
    r.site_type = normalize_text(&raw.site_type);
    r.not_yes_text = normalize_text(&raw.not_yes_text);
    r.clarity_comment = normalize_text(&raw.clarity_comment);
    r.cookie_listing_comment = normalize_text(&raw.cookie_listing_comment);

    r.widget_level_raw = normalize_lower(&raw.widget_level_raw);
    r.location_raw = normalize_lower(&raw.location_raw);
    r.content_blocking_raw = normalize_lower(&raw.content_blocking_raw);
    r.works_after_reject_raw = normalize_lower(&raw.works_after_reject_raw);
    r.not_yes_visibility_raw = normalize_lower(&raw.not_yes_visibility_raw);
    r.third_party_raw = normalize_lower(&raw.third_party_raw);

    r.content_blocking = parse_tristate(&r.content_blocking_raw);
    r.works_after_reject = parse_tristate(&r.works_after_reject_raw);

    r.side_notes.clear();
    let noted = [
        &r.widget_level_raw,
        &r.content_blocking_raw,
        &r.third_party_raw,
        &r.works_after_reject_raw,
    ];
    for (field, text) in NOTED_FIELDS.iter().zip(noted) {
        if lookup_tristate(text).is_none() {
            continue;
        }
        if let (_, Some(comment)) = split_value_comment(text) {
            r.side_notes.insert(field.to_string(), comment);
        }
    }
    r
}
