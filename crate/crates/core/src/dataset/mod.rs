//! Loading, cleaning, labelling and splitting the annotated banner corpus.

mod clean;
mod labels;
mod load;
mod record;
mod split;

pub use clean::{
    clean_record, lookup_tristate, normalize_lower, normalize_text, parse_tristate,
    split_value_comment, tristate_table_version,
};
pub use labels::{label_histogram, resolve_labels, resolve_pair, LabelHistogram};
pub use load::{
    default_headers, load_raw_csv, load_raw_csv_with, read_corpus, write_corpus, CellIssue,
    ColumnMap, Corpus, LoadReport, RowIssue, LOAD_REPORT_VERSION,
};
pub use record::{BannerRecord, LabelSet, Pattern, ReviewerPair, TriState};
pub use split::{split_train_test, Fraction, SplitIndices};
