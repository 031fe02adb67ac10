//! Reading and writing the banner corpus CSV.

use std::collections::{BTreeMap, HashSet};
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::clean::{lookup_tristate, normalize_lower};
use super::record::{BannerRecord, Pattern, ReviewerPair, TriState};
use crate::error::{Error, Result};

pub const LOAD_REPORT_VERSION: u32 = 1;

const DEFAULT_COLUMN_MAP: &str = include_str!("../../data/columns.map");

/// Logical field names, in the order the cleaned CSV writes them.
const FIELDS: [&str; 14] = [
    "site_id",
    "country",
    "site_type",
    "widget_level",
    "not_yes_text",
    "location",
    "content_blocking",
    "options_words_count",
    "clicks_to_reject_all",
    "cookie_listing",
    "third_party",
    "works_after_reject",
    "clarity",
    "not_yes_visibility",
];

fn reviewer_fields() -> impl Iterator<Item = (Pattern, usize, String)> {
    Pattern::ALL
        .into_iter()
        .flat_map(|p| [(p, 0, format!("{}_r1", p.key())), (p, 1, format!("{}_r2", p.key()))])
}

/// Maps logical field names to CSV header names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ColumnMap {
    map: BTreeMap<String, String>,
}

impl Default for ColumnMap {
    fn default() -> Self {
        ColumnMap::parse(DEFAULT_COLUMN_MAP).expect("shipped column map")
    }
}

impl ColumnMap {
    /// Parses `field = header` lines; `#` starts a comment. Fields not listed
    /// keep their default header.
    pub fn parse(text: &str) -> Result<Self> {
        let mut map = BTreeMap::new();
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("column map line {}: expected `field = header`", i + 1)))?;
            let k = k.trim();
            let known = FIELDS.contains(&k) || reviewer_fields().any(|(_, _, f)| f == k);
            if !known {
                return Err(Error::Config(format!("column map line {}: unknown field `{k}`", i + 1)));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(ColumnMap { map })
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut base = ColumnMap::default();
        base.map.extend(ColumnMap::parse(&text)?.map);
        Ok(base)
    }

    pub fn header<'a>(&'a self, field: &'a str) -> &'a str {
        self.map.get(field).map(String::as_str).unwrap_or(field)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RowIssue {
    pub line: u64,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellIssue {
    pub line: u64,
    pub column: String,
    pub value: String,
}

/// Everything noteworthy found while loading, emitted as JSON next to the
/// stage outputs.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct LoadReport {
    pub format_version: u32,
    pub rows_read: usize,
    pub records: usize,
    pub malformed_rows: Vec<RowIssue>,
    pub malformed_cells: Vec<CellIssue>,
    pub missing_numeric_cells: Vec<CellIssue>,
    /// Reviewer cells that were neither a yes nor a no synonym; treated as absent.
    pub non_affirmative_marks: Vec<CellIssue>,
    /// Reviewer cells left empty.
    pub missing_annotations: Vec<CellIssue>,
    /// Records dropped from labelling because an annotation was missing.
    pub unlabeled_site_ids: Vec<String>,
}

#[derive(Debug, Clone)]
pub struct Corpus {
    pub records: Vec<BannerRecord>,
    pub report: LoadReport,
}

pub fn load_raw_csv(path: &Path) -> Result<Corpus> {
    load_raw_csv_with(path, &ColumnMap::default())
}

pub fn load_raw_csv_with(path: &Path, columns: &ColumnMap) -> Result<Corpus> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_corpus(file, columns)
}

pub fn read_corpus<R: Read>(input: R, columns: &ColumnMap) -> Result<Corpus> {
    let mut reader = csv::ReaderBuilder::new()
        .flexible(true)
        .comment(Some(b'#'))
        .from_reader(input);
    let headers = reader.headers()?.clone();
    let position: BTreeMap<String, usize> = headers
        .iter()
        .enumerate()
        .map(|(i, h)| (h.trim().to_lowercase(), i))
        .collect();
    let col = |field: &str| -> Result<usize> {
        let header = columns.header(field);
        position
            .get(&header.trim().to_lowercase())
            .copied()
            .ok_or_else(|| Error::MissingColumn(header.to_string()))
    };
    let idx: Vec<usize> = FIELDS.iter().map(|f| col(f)).collect::<Result<_>>()?;
    let reviewer_idx: Vec<(Pattern, usize, usize, String)> = reviewer_fields()
        .map(|(p, slot, f)| Ok((p, slot, col(&f)?, columns.header(&f).to_string())))
        .collect::<Result<_>>()?;

    let mut report = LoadReport {
        format_version: LOAD_REPORT_VERSION,
        ..Default::default()
    };
    let mut records = Vec::new();
    let mut seen = HashSet::new();
    for row in reader.records() {
        report.rows_read += 1;
        let row = match row {
            Ok(row) => row,
            Err(e) => {
                let line = e.position().map(|p| p.line()).unwrap_or(0);
                report.malformed_rows.push(RowIssue {
                    line,
                    reason: e.to_string(),
                });
                continue;
            }
        };
        let line = row.position().map(|p| p.line()).unwrap_or(0);
        if row.len() != headers.len() {
            report.malformed_rows.push(RowIssue {
                line,
                reason: format!("expected {} fields, found {}", headers.len(), row.len()),
            });
            continue;
        }
        let cell = |i: usize| row.get(idx[i]).unwrap_or("").to_string();
        let site_id = cell(0).trim().to_string();
        if site_id.is_empty() {
            report.malformed_rows.push(RowIssue {
                line,
                reason: "empty site id".into(),
            });
            continue;
        }
        if !seen.insert(site_id.clone()) {
            report.malformed_rows.push(RowIssue {
                line,
                reason: format!("duplicate site id {site_id:?}"),
            });
            continue;
        }
        let mut count = |i: usize| -> Option<u32> {
            let raw = cell(i);
            let t = raw.trim();
            let issue = || CellIssue {
                line,
                column: columns.header(FIELDS[i]).to_string(),
                value: raw.clone(),
            };
            if t.is_empty() {
                report.missing_numeric_cells.push(issue());
                return None;
            }
            match t.parse::<u32>() {
                Ok(v) => Some(v),
                Err(_) => {
                    report.malformed_cells.push(issue());
                    None
                }
            }
        };
        let options_words_count = count(7);
        let clicks_to_reject_all = count(8);

        let mut annotations = [ReviewerPair::default(); 5];
        for (pattern, slot, ci, header) in &reviewer_idx {
            let raw = row.get(*ci).unwrap_or("");
            let issue = || CellIssue {
                line,
                column: header.clone(),
                value: raw.to_string(),
            };
            let flag = match parse_flag(raw) {
                Flag::Present => Some(true),
                Flag::Absent => Some(false),
                Flag::NonAffirmative => {
                    report.non_affirmative_marks.push(issue());
                    Some(false)
                }
                Flag::Missing => {
                    report.missing_annotations.push(issue());
                    None
                }
            };
            let pair = &mut annotations[pattern.index()];
            if *slot == 0 {
                pair.a = flag;
            } else {
                pair.b = flag;
            }
        }

        records.push(BannerRecord {
            site_id,
            country: cell(1),
            site_type: cell(2),
            widget_level_raw: cell(3),
            not_yes_text: cell(4),
            location_raw: cell(5),
            content_blocking_raw: cell(6),
            content_blocking: TriState::Unknown,
            options_words_count,
            clicks_to_reject_all,
            cookie_listing_comment: cell(9),
            third_party_raw: cell(10),
            works_after_reject_raw: cell(11),
            works_after_reject: TriState::Unknown,
            clarity_comment: cell(12),
            not_yes_visibility_raw: cell(13),
            annotations,
            side_notes: BTreeMap::new(),
        });
    }
    report.records = records.len();
    Ok(Corpus { records, report })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Flag {
    Present,
    Absent,
    NonAffirmative,
    Missing,
}

pub(crate) fn parse_flag(cell: &str) -> Flag {
    if normalize_lower(cell).is_empty() {
        return Flag::Missing;
    }
    match lookup_tristate(cell) {
        Some(TriState::Yes) => Flag::Present,
        Some(TriState::No) => Flag::Absent,
        _ => Flag::NonAffirmative,
    }
}

fn flag_text(flag: Option<bool>) -> &'static str {
    match flag {
        Some(true) => "yes",
        Some(false) => "no",
        None => "",
    }
}

fn count_text(v: Option<u32>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

/// The header row written by [`write_corpus`], using default column names.
pub fn default_headers() -> Vec<String> {
    let map = ColumnMap::default();
    FIELDS
        .iter()
        .map(|f| map.header(f).to_string())
        .chain(reviewer_fields().map(|(_, _, f)| map.header(&f).to_string()))
        .collect()
}

/// Writes records in the loader's default schema. `preamble` lines are
/// written as `#` comments before the header.
pub fn write_corpus<W: Write>(out: W, records: &[BannerRecord], preamble: &[String]) -> Result<()> {
    let mut out = out;
    for line in preamble {
        writeln!(out, "# {line}").map_err(|e| Error::io("<corpus>", e))?;
    }
    let mut w = csv::Writer::from_writer(out);
    w.write_record(default_headers())?;
    for r in records {
        let mut row = vec![
            r.site_id.clone(),
            r.country.clone(),
            r.site_type.clone(),
            r.widget_level_raw.clone(),
            r.not_yes_text.clone(),
            r.location_raw.clone(),
            r.content_blocking_raw.clone(),
            count_text(r.options_words_count),
            count_text(r.clicks_to_reject_all),
            r.cookie_listing_comment.clone(),
            r.third_party_raw.clone(),
            r.works_after_reject_raw.clone(),
            r.clarity_comment.clone(),
            r.not_yes_visibility_raw.clone(),
        ];
        for pair in &r.annotations {
            row.push(flag_text(pair.a).to_string());
            row.push(flag_text(pair.b).to_string());
        }
        w.write_record(&row)?;
    }
    w.flush().map_err(|e| Error::io("<corpus>", e))?;
    Ok(())
}
