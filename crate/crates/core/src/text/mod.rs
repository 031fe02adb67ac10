//! Text normalisation: tokenising, stemming, translation and sentiment.

pub mod porter;
mod provider;
mod sentiment;
mod tokenize;

pub use provider::{score_sentiment, translate, ExternalConfig, TextProvider, ENDPOINT_ENV, KEY_ENV};
pub use sentiment::{lexicon_sentiment, Lexicon, SentimentResult};
pub use tokenize::{stem_tokens, stemmed_multiset, tokenize, TokenList};
