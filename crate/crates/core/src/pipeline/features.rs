//! The ten-feature banner description and its numeric encoding.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::cluster::DEFAULT_CLUSTERS;
use crate::dataset::{lookup_tristate, normalize_lower, split_value_comment, BannerRecord, TriState};
use crate::error::{Error, Result};
use crate::text::{stem_tokens, tokenize, SentimentResult};

pub const UNKNOWN: &str = "unknown";

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum WidgetType {
    Button,
    Link,
    Box,
    DropDown,
    Unknown,
}

impl WidgetType {
    pub const ALL: [WidgetType; 5] = [
        WidgetType::Button,
        WidgetType::Link,
        WidgetType::Box,
        WidgetType::DropDown,
        WidgetType::Unknown,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            WidgetType::Button => "button",
            WidgetType::Link => "link",
            WidgetType::Box => "box",
            WidgetType::DropDown => "drop-down",
            WidgetType::Unknown => UNKNOWN,
        }
    }

    /// The widget named last in `text`, matched on Porter stems.
    pub fn detect(text: &str) -> WidgetType {
        let stems = stem_tokens(&tokenize(text));
        let stems = stems.as_slice();
        let mut found = WidgetType::Unknown;
        for (i, s) in stems.iter().enumerate() {
            let hit = match s.as_str() {
                "button" => Some(WidgetType::Button),
                "link" | "hyperlink" => Some(WidgetType::Link),
                "box" | "checkbox" => Some(WidgetType::Box),
                "dropdown" => Some(WidgetType::DropDown),
                "drop" if stems.get(i + 1).is_some_and(|n| n == "down") => Some(WidgetType::DropDown),
                _ => None,
            };
            if let Some(w) = hit {
                found = w;
            }
        }
        found
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Visibility {
    Immediate,
    Scroll,
    Unknown,
}

impl Visibility {
    pub const ALL: [Visibility; 3] = [Visibility::Immediate, Visibility::Scroll, Visibility::Unknown];

    pub fn as_str(self) -> &'static str {
        match self {
            Visibility::Immediate => "immediate",
            Visibility::Scroll => "scroll",
            Visibility::Unknown => UNKNOWN,
        }
    }

    /// First of "immediate" or "scroll" (any inflection) found in `text`.
    pub fn detect(text: &str) -> Visibility {
        for s in stem_tokens(&tokenize(text)).as_slice() {
            if s.starts_with("immedi") {
                return Visibility::Immediate;
            }
            if s.starts_with("scroll") {
                return Visibility::Scroll;
            }
        }
        Visibility::Unknown
    }
}

/// Location category: the value part of the location text with its tokens
/// re-joined by single spaces, or `"unknown"`.
pub fn location_category(raw: &str) -> String {
    let (value, _) = split_value_comment(&normalize_lower(raw));
    if lookup_tristate(&value) == Some(TriState::Unknown) {
        return UNKNOWN.into();
    }
    let tokens = tokenize(&value);
    if tokens.as_slice().iter().all(|t| t.chars().all(|c| c.is_ascii_digit())) {
        return UNKNOWN.into();
    }
    tokens.join(" ")
}

fn tristate_flag(t: TriState) -> Option<bool> {
    match t {
        TriState::Yes => Some(true),
        TriState::No => Some(false),
        TriState::Unknown => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub notyesclusters: usize,
    /// `None` when the widget-level text has no recognizable yes/no value.
    pub equalwidgetlevel: Option<bool>,
    pub widgettypelevel: WidgetType,
    pub location: String,
    pub contentblocking: Option<bool>,
    pub optionswordscounted: Option<u32>,
    pub clickstorejectall: Option<u32>,
    pub notyesvisibility: Visibility,
    pub clarityofoptions: f64,
    pub iscookieusedlisted: f64,
}

/// `sentiments` are the scores of the clarity comment and the cookie
/// listing comment, in that order.
pub fn build_feature_vector(record: &BannerRecord, cluster_id: usize, sentiments: [SentimentResult; 2]) -> FeatureVector {
    let (widget_value, _) = split_value_comment(&normalize_lower(&record.widget_level_raw));
    let equal = lookup_tristate(&widget_value)
        .or_else(|| lookup_tristate(&record.widget_level_raw.to_lowercase()))
        .and_then(tristate_flag);
    FeatureVector {
        notyesclusters: cluster_id,
        equalwidgetlevel: equal,
        widgettypelevel: WidgetType::detect(&record.widget_level_raw),
        location: location_category(&record.location_raw),
        contentblocking: tristate_flag(record.content_blocking),
        optionswordscounted: record.options_words_count,
        clickstorejectall: record.clicks_to_reject_all,
        notyesvisibility: Visibility::detect(&record.not_yes_visibility_raw),
        clarityofoptions: sentiments[0].score.clamp(-1.0, 1.0),
        iscookieusedlisted: sentiments[1].score.clamp(-1.0, 1.0),
    }
}

/// The ten source features, in encoding order.
pub const SOURCE_FEATURES: [&str; 10] = [
    "notyesclusters",
    "equalwidgetlevel",
    "widgettypelevel",
    "location",
    "contentblocking",
    "optionswordscounted",
    "clickstorejectall",
    "notyesvisibility",
    "clarityofoptions",
    "iscookieusedlisted",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ColumnKind {
    OneHot { level: String },
    Binary,
    Count,
    Real,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ColumnSpec {
    /// Index into [`SOURCE_FEATURES`].
    pub source: usize,
    pub kind: ColumnKind,
}

impl ColumnSpec {
    pub fn name(&self) -> String {
        match &self.kind {
            ColumnKind::OneHot { level } => format!("{}={}", SOURCE_FEATURES[self.source], level),
            _ => SOURCE_FEATURES[self.source].to_string(),
        }
    }
}

/// Medians of the imputable columns over the fitting rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Imputation {
    pub equalwidgetlevel: f64,
    pub contentblocking: f64,
    pub optionswordscounted: f64,
    pub clickstorejectall: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EncodedMatrix {
    pub rows: Vec<Vec<f64>>,
    pub column_spec: Vec<ColumnSpec>,
    pub imputation_values: Imputation,
}

impl EncodedMatrix {
    pub fn n_columns(&self) -> usize {
        self.column_spec.len()
    }

    pub fn select(&self, ids: &[usize]) -> Vec<Vec<f64>> {
        ids.iter().map(|&i| self.rows[i].clone()).collect()
    }
}

/// Median, averaging the two middle values for even counts; `None` when
/// there are no values.
pub fn median(values: &mut [f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_by(f64::total_cmp);
    let n = values.len();
    Some(if n % 2 == 1 {
        values[n / 2]
    } else {
        values[n / 2 - 1] / 2.0 + values[n / 2] / 2.0
    })
}

fn fitted_median(vectors: &[FeatureVector], fit_rows: &[usize], get: impl Fn(&FeatureVector) -> Option<f64>) -> f64 {
    let mut vals: Vec<f64> = fit_rows.iter().filter_map(|&i| get(&vectors[i])).collect();
    median(&mut vals).unwrap_or(0.0)
}

/// Builds the column spec (cluster levels, widget types, location levels
/// seen in `fit_rows`, visibility) and imputation medians from `fit_rows`,
/// then encodes every vector.
pub fn encode_features(vectors: &[FeatureVector], fit_rows: &[usize]) -> Result<EncodedMatrix> {
    if fit_rows.is_empty() {
        return Err(Error::EmptyInput);
    }
    if let Some(&bad) = fit_rows.iter().find(|&&i| i >= vectors.len()) {
        return Err(Error::ShapeMismatch(format!("fit row {bad} out of range")));
    }
    let n_clusters = vectors
        .iter()
        .map(|v| v.notyesclusters + 1)
        .max()
        .unwrap_or(0)
        .max(DEFAULT_CLUSTERS);
    let locations: BTreeSet<&str> = fit_rows
        .iter()
        .map(|&i| vectors[i].location.as_str())
        .filter(|l| *l != UNKNOWN)
        .collect();

    let one_hot = |source: usize, level: &str| ColumnSpec {
        source,
        kind: ColumnKind::OneHot { level: level.into() },
    };
    let mut spec = Vec::new();
    spec.extend((0..n_clusters).map(|c| one_hot(0, &c.to_string())));
    spec.push(ColumnSpec { source: 1, kind: ColumnKind::Binary });
    spec.extend(WidgetType::ALL.iter().map(|w| one_hot(2, w.as_str())));
    spec.extend(locations.iter().map(|l| one_hot(3, l)));
    spec.push(one_hot(3, UNKNOWN));
    spec.push(ColumnSpec { source: 4, kind: ColumnKind::Binary });
    spec.push(ColumnSpec { source: 5, kind: ColumnKind::Count });
    spec.push(ColumnSpec { source: 6, kind: ColumnKind::Count });
    spec.extend(Visibility::ALL.iter().map(|v| one_hot(7, v.as_str())));
    spec.push(ColumnSpec { source: 8, kind: ColumnKind::Real });
    spec.push(ColumnSpec { source: 9, kind: ColumnKind::Real });

    let bin = |b: Option<bool>| b.map(|v| v as u8 as f64);
    let imputation = Imputation {
        equalwidgetlevel: fitted_median(vectors, fit_rows, |v| bin(v.equalwidgetlevel)),
        contentblocking: fitted_median(vectors, fit_rows, |v| bin(v.contentblocking)),
        optionswordscounted: fitted_median(vectors, fit_rows, |v| v.optionswordscounted.map(f64::from)),
        clickstorejectall: fitted_median(vectors, fit_rows, |v| v.clickstorejectall.map(f64::from)),
    };
    let rows = vectors.iter().map(|v| encode_row(v, &spec, &imputation)).collect();
    Ok(EncodedMatrix {
        rows,
        column_spec: spec,
        imputation_values: imputation,
    })
}

/// Encodes one vector against a fixed column spec. Categorical levels not
/// in the column spec fall into that group's `unknown` column.
pub fn encode_row(v: &FeatureVector, spec: &[ColumnSpec], imp: &Imputation) -> Vec<f64> {
    let location_known = spec.iter().any(|c| {
        c.source == 3 && matches!(&c.kind, ColumnKind::OneHot { level } if *level == v.location && level != UNKNOWN)
    });
    let location = if location_known { v.location.as_str() } else { UNKNOWN };
    let bin = |b: Option<bool>, fill: f64| b.map_or(fill, |v| v as u8 as f64);
    spec.iter()
        .map(|c| match (&c.kind, c.source) {
            (ColumnKind::OneHot { level }, 0) => (*level == v.notyesclusters.to_string()) as u8 as f64,
            (ColumnKind::OneHot { level }, 2) => (level == v.widgettypelevel.as_str()) as u8 as f64,
            (ColumnKind::OneHot { level }, 3) => (level == location) as u8 as f64,
            (ColumnKind::OneHot { level }, 7) => (level == v.notyesvisibility.as_str()) as u8 as f64,
            (_, 1) => bin(v.equalwidgetlevel, imp.equalwidgetlevel),
            (_, 4) => bin(v.contentblocking, imp.contentblocking),
            (_, 5) => v.optionswordscounted.map_or(imp.optionswordscounted, f64::from),
            (_, 6) => v.clickstorejectall.map_or(imp.clickstorejectall, f64::from),
            (_, 8) => v.clarityofoptions,
            (_, 9) => v.iscookieusedlisted,
            _ => unreachable!("column spec built by encode_features"),
        })
        .collect()
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "cluster {} | widget {} | location {} | visibility {}",
            self.notyesclusters,
            self.widgettypelevel.as_str(),
            self.location,
            self.notyesvisibility.as_str()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::{clean_record, ReviewerPair};
    use proptest::prelude::*;

    pub(crate) fn vice() -> BannerRecord {
        clean_record(&BannerRecord {
            site_id: "Vice".into(),
            country: "The US".into(),
            site_type: "News".into(),
            widget_level_raw: "Yes, buttons".into(),
            not_yes_text: "Configure Prefrences".into(),
            location_raw: "Middle of page, middle".into(),
            content_blocking_raw: "No".into(),
            content_blocking: TriState::Unknown,
            options_words_count: Some(559),
            clicks_to_reject_all: Some(2),
            not_yes_visibility_raw: "Immediate".into(),
            clarity_comment: "Very good: You easily understand what you can opt out from and not.".into(),
            cookie_listing_comment: "Cookie categories and their purposes are described in an understandable way."
                .into(),
            third_party_raw: "No".into(),
            works_after_reject_raw: "Yes".into(),
            works_after_reject: TriState::Unknown,
            annotations: [ReviewerPair::new(false, false); 5],
            side_notes: Default::default(),
        })
    }

    fn neutral() -> [SentimentResult; 2] {
        [SentimentResult { score: 0.0, magnitude: 0.0 }; 2]
    }

    #[test]
    fn vice_features() {
        let v = build_feature_vector(&vice(), 3, neutral());
        assert_eq!(v.optionswordscounted, Some(559));
        assert_eq!(v.clickstorejectall, Some(2));
        assert_eq!(v.notyesvisibility, Visibility::Immediate);
        assert_eq!(v.contentblocking, Some(false));
        assert_eq!(v.notyesclusters, 3);
        assert_eq!(v.equalwidgetlevel, Some(true));
        assert_eq!(v.widgettypelevel, WidgetType::Button);
        assert_eq!(v.location, "middle of page");
    }

    #[test]
    fn unparseable_location_is_unknown() {
        let mut r = vice();
        r.location_raw = " ?? ".into();
        assert_eq!(build_feature_vector(&r, 0, neutral()).location, UNKNOWN);
        r.location_raw = "n/a".into();
        assert_eq!(build_feature_vector(&r, 0, neutral()).location, UNKNOWN);
    }

    #[test]
    fn widget_detection() {
        assert_eq!(WidgetType::detect("No, accept is a button, reject a link"), WidgetType::Link);
        assert_eq!(WidgetType::detect("yes, drop-down"), WidgetType::DropDown);
        assert_eq!(WidgetType::detect("yes, checkboxes"), WidgetType::Box);
        assert_eq!(WidgetType::detect("yes"), WidgetType::Unknown);
    }

    fn sample(i: usize) -> FeatureVector {
        FeatureVector {
            notyesclusters: i % 6,
            equalwidgetlevel: Some(i % 2 == 0),
            widgettypelevel: WidgetType::ALL[i % 5],
            location: ["middle of page", "bottom entire", "top entire"][i % 3].into(),
            contentblocking: (i % 4 != 0).then_some(i % 3 == 0),
            optionswordscounted: Some(100 * i as u32),
            clickstorejectall: Some(i as u32 % 4),
            notyesvisibility: Visibility::ALL[i % 3],
            clarityofoptions: 0.1,
            iscookieusedlisted: -0.2,
        }
    }

    #[test]
    fn one_hot_button() {
        let m = encode_features(&[sample(0)], &[0]).unwrap();
        let cols: Vec<f64> = m
            .column_spec
            .iter()
            .zip(&m.rows[0])
            .filter(|(c, _)| c.source == 2)
            .map(|(_, v)| *v)
            .collect();
        assert_eq!(cols, vec![1.0, 0.0, 0.0, 0.0, 0.0]);
    }

    #[test]
    fn median_imputation_from_fit_rows_only() {
        let mut vs: Vec<FeatureVector> = [300, 412, 500].iter().map(|&c| FeatureVector {
            optionswordscounted: Some(c),
            ..sample(1)
        }).collect();
        vs.push(FeatureVector {
            optionswordscounted: None,
            ..sample(1)
        });
        vs.push(FeatureVector {
            optionswordscounted: Some(100_000),
            ..sample(1)
        });
        let m = encode_features(&vs, &[0, 1, 2, 3]).unwrap();
        let col = m.column_spec.iter().position(|c| c.source == 5).unwrap();
        assert_eq!(m.imputation_values.optionswordscounted, 412.0);
        assert_eq!(m.rows[3][col], 412.0);
    }

    #[test]
    fn unseen_location_maps_to_unknown() {
        let mut vs = vec![sample(0), sample(1)];
        vs[1].location = "left corner".into();
        let m = encode_features(&vs, &[0]).unwrap();
        let names: Vec<String> = m.column_spec.iter().map(|c| c.name()).collect();
        assert!(!names.contains(&"location=left corner".to_string()));
        let unk = names.iter().position(|n| n == "location=unknown").unwrap();
        assert_eq!(m.rows[1][unk], 1.0);
        assert!(matches!(encode_features(&vs, &[]), Err(Error::EmptyInput)));
    }

    proptest! {
        #[test]
        fn one_hot_groups_sum_to_one(ids in prop::collection::vec(0usize..50, 1..30), fit in 1usize..30) {
            let vs: Vec<FeatureVector> = ids.iter().map(|&i| sample(i)).collect();
            let fit_rows: Vec<usize> = (0..fit.min(vs.len())).collect();
            let m = encode_features(&vs, &fit_rows).unwrap();
            for row in &m.rows {
                for group in [0, 2, 3, 7] {
                    let s: f64 = m.column_spec.iter().zip(row).filter(|(c, _)| c.source == group).map(|(_, v)| v).sum();
                    prop_assert_eq!(s, 1.0);
                }
            }
            // Re-encoding with the fitted spec is a pure function of the row.
            for (v, row) in vs.iter().zip(&m.rows) {
                prop_assert_eq!(&encode_row(v, &m.column_spec, &m.imputation_values), row);
            }
        }

        #[test]
        fn test_rows_do_not_change_fitted_statistics(extra in prop::collection::vec(0usize..50, 0..10)) {
            let mut vs: Vec<FeatureVector> = (0..8).map(sample).collect();
            let base = encode_features(&vs, &[0, 1, 2, 3]).unwrap();
            vs.extend(extra.iter().map(|&i| FeatureVector { location: format!("spot {i}"), optionswordscounted: None, ..sample(i) }));
            let more = encode_features(&vs, &[0, 1, 2, 3]).unwrap();
            prop_assert_eq!(&base.imputation_values, &more.imputation_values);
            let loc = |m: &EncodedMatrix| m.column_spec.iter().filter(|c| c.source == 3).cloned().collect::<Vec<_>>();
            prop_assert_eq!(loc(&base), loc(&more));
        }
    }
}
