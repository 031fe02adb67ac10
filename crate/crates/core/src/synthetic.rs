//! A deterministic stand-in corpus with the same schema and the same kind of
//! messiness as the annotated banner data.
//!
//! Labels are drawn from feature-dependent probabilities, one independent
//! draw per reviewer, so the learners have real but noisy signal to find.
//! Nothing here is tuned to reproduce published statistics.

use rand::Rng;

use crate::dataset::{BannerRecord, Pattern, ReviewerPair, TriState};
use crate::rng;

pub const SYNTHETIC_SIZE: usize = 300;

const COUNTRIES: [&str; 6] = ["The US", "Germany", "Denmark", "Norway", "UK", "France"];
const SITE_TYPES: [&str; 5] = ["News", "Shopping", "Blog", "Sports", "Tech"];

/// Phrase families for the "not yes" option.
const NOT_YES: [&[&str]; 6] = [
    &["Settings", "Cookie settings", "Cookie Settings", "settings"],
    &["Manage preferences", "Configure Prefrences", "Manage options", "Customize"],
    &["More options", "More information", "Learn more", "Read more"],
    &["Reject all", "Decline", "Refuse all", "Decline all"],
    &["Privacy policy", "Cookie policy", "Privacy notice"],
    &["No thanks", "No, thank you", "Not now"],
];

const LOCATIONS: [&str; 6] = [
    "Middle of page, middle",
    "  Middle of page,   middle",
    "Bottom entire",
    "Top entire",
    "Bottom left corner",
    "Top right, small",
];

const CLARITY_GOOD: [&str; 4] = [
    "Very good: You easily understand what you can opt out from and not.",
    "Clear and simple options, easy to reject.",
    "Good, the choices are understandable.",
    "Fair overview, helpful descriptions.",
];
const CLARITY_BAD: [&str; 4] = [
    "Confusing, the reject option is hidden.",
    "Hard to find how to opt out; misleading colours.",
    "Unclear wording and a difficult layout.",
    "Very poor, deceptive design with hidden toggles.",
];
const LISTING_GOOD: [&str; 3] = [
    "Cookie categories and their purposes are described in an understandable way. All cookies are listed.",
    "Complete list with clear purposes.",
    "Detailed and transparent listing.",
];
const LISTING_BAD: [&str; 3] = [
    "No list of cookies, vague purposes.",
    "Incomplete and confusing list.",
    "Missing information about third parties.",
];

fn pick<'a, T>(r: &mut rng::Rng, xs: &'a [T]) -> &'a T {
    &xs[r.random_range(0..xs.len())]
}

fn sigmoid(z: f64) -> f64 {
    1.0 / (1.0 + (-z).exp())
}

fn yes_no(r: &mut rng::Rng, yes: bool) -> String {
    let forms: &[&str] = if yes { &["Yes", "yes", "YES ", "Yes, mostly"] } else { &["No", "no", "No ", "NO"] };
    pick(r, forms).to_string()
}

/// `SYNTHETIC_SIZE` raw records generated from `seed`.
pub fn synthetic_corpus(seed: u64) -> Vec<BannerRecord> {
    synthetic_corpus_sized(seed, SYNTHETIC_SIZE)
}

pub fn synthetic_corpus_sized(seed: u64, n: usize) -> Vec<BannerRecord> {
    let mut r = rng::stream(seed, 0);
    (0..n).map(|i| one_record(&mut r, i)).collect()
}

fn one_record(r: &mut rng::Rng, i: usize) -> BannerRecord {
    let family = r.random_range(0..NOT_YES.len());
    let not_yes = pick(r, NOT_YES[family]).to_string();
    let equal = r.random_bool(0.55);
    let widget = *pick(r, &["button", "link", "link", "box", "drop-down"]);
    let widget_level_raw = if equal {
        format!("{}, {widget}s", pick(r, &["Yes", "yes", "Yes "]))
    } else {
        format!("No, accept is a button, reject is a {widget}")
    };
    let blocking = r.random_bool(0.3);
    let scroll = r.random_bool(0.25);
    let words: u32 = (20.0 * (r.random_range(0.0..3.8f64)).exp()) as u32;
    let clicks: u32 = match family {
        3 | 5 => r.random_range(1..3),
        _ => r.random_range(1..9),
    };
    let clear = r.random_bool(if equal { 0.7 } else { 0.35 });
    let listed = r.random_bool(0.5);
    let works = r.random_bool(0.85);
    let third_party = r.random_bool(0.6);

    let x = [
        blocking as u8 as f64,
        scroll as u8 as f64,
        (clicks as f64 - 3.0) / 2.0,
        (words as f64).ln() - 4.0,
        if clear { 1.0 } else { -1.0 },
        if equal { 1.0 } else { -1.0 },
        if widget == "link" { 1.0 } else { 0.0 },
        if works { 0.0 } else { 1.0 },
        if listed { 1.0 } else { -1.0 },
    ];
    let risk = |p: Pattern| match p {
        Pattern::Nagging => -2.2 + 1.8 * x[0] + 1.2 * x[1],
        Pattern::Obstruction => 0.3 + 1.4 * x[2] - 0.6 * x[4] + if family >= 3 { -1.5 } else { 0.5 },
        Pattern::Sneaking => -0.8 + 0.9 * x[3] - 0.7 * x[8] - 0.4 * x[4],
        Pattern::InterfaceInterference => 0.5 - 1.3 * x[5] + 1.0 * x[6] - 0.7 * x[4],
        Pattern::ForcedAction => -1.6 + 1.6 * x[0] + 1.8 * x[7],
    };
    let mut annotations = [ReviewerPair::new(false, false); 5];
    for p in Pattern::ALL {
        let prob = sigmoid(risk(p));
        annotations[p.index()] = ReviewerPair::new(r.random_bool(prob), r.random_bool(prob));
    }

    let options_words_count = match r.random_range(0..40) {
        0 => None,
        _ => Some(words),
    };
    BannerRecord {
        site_id: format!("site-{i:03}"),
        country: pick(r, &COUNTRIES).to_string(),
        site_type: pick(r, &SITE_TYPES).to_string(),
        widget_level_raw,
        not_yes_text: not_yes,
        location_raw: pick(r, &LOCATIONS).to_string(),
        content_blocking_raw: yes_no(r, blocking),
        content_blocking: TriState::Unknown,
        options_words_count,
        clicks_to_reject_all: Some(clicks),
        not_yes_visibility_raw: if scroll { "Scroll" } else { "Immediate" }.to_string(),
        clarity_comment: pick(r, if clear { &CLARITY_GOOD } else { &CLARITY_BAD }).to_string(),
        cookie_listing_comment: pick(r, if listed { &LISTING_GOOD } else { &LISTING_BAD }).to_string(),
        third_party_raw: yes_no(r, third_party),
        works_after_reject_raw: yes_no(r, works),
        works_after_reject: TriState::Unknown,
        annotations,
        side_notes: Default::default(),
    }
}
