//! Translation and sentiment providers.
//!
//! The offline provider is deterministic and needs no network: translation is
//! the identity and sentiment comes from the stem-matched lexicon. The
//! external provider talks JSON over HTTP to a text service:
//!
//! ```text
//! request:  {"op": "translate" | "sentiment", "text": "..."}
//! response: {"text": "..."}  or  {"score": s, "magnitude": m}
//! ```

use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::sentiment::{lexicon_sentiment, Lexicon, SentimentResult};
use crate::error::{Error, Result};

pub const ENDPOINT_ENV: &str = "DARKBANNER_TEXT_ENDPOINT";
pub const KEY_ENV: &str = "DARKBANNER_TEXT_KEY";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExternalConfig {
    pub endpoint: String,
    #[serde(skip_serializing)]
    pub key: Option<String>,
    pub retries: u32,
    pub timeout_ms: u64,
}

impl ExternalConfig {
    pub fn new(endpoint: impl Into<String>) -> Self {
        ExternalConfig {
            endpoint: endpoint.into(),
            key: None,
            retries: 2,
            timeout_ms: 10_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum TextProvider {
    #[default]
    OfflineDefault,
    External(ExternalConfig),
}

impl TextProvider {
    /// External provider configured from `DARKBANNER_TEXT_ENDPOINT` and
    /// `DARKBANNER_TEXT_KEY`; `None` when no endpoint is set.
    pub fn external_from_env() -> Option<Self> {
        let endpoint = std::env::var(ENDPOINT_ENV).ok().filter(|e| !e.trim().is_empty())?;
        let mut cfg = ExternalConfig::new(endpoint);
        cfg.key = std::env::var(KEY_ENV).ok().filter(|k| !k.is_empty());
        Some(TextProvider::External(cfg))
    }

    pub fn name(&self) -> &'static str {
        match self {
            TextProvider::OfflineDefault => "offline-default",
            TextProvider::External(_) => "external",
        }
    }
}

#[derive(Serialize)]
struct ServiceRequest<'a> {
    op: &'a str,
    text: &'a str,
}

#[derive(Deserialize)]
struct TranslateResponse {
    text: String,
}

pub fn translate(text: &str, provider: &TextProvider) -> Result<String> {
    match provider {
        TextProvider::OfflineDefault => Ok(text.to_string()),
        TextProvider::External(cfg) => {
            if text.is_empty() {
                return Ok(String::new());
            }
            let resp: TranslateResponse = call(cfg, "translate", text)?;
            Ok(resp.text)
        }
    }
}

pub fn score_sentiment(text: &str, lexicon: &Lexicon, provider: &TextProvider) -> Result<SentimentResult> {
    match provider {
        TextProvider::OfflineDefault => Ok(lexicon_sentiment(text, lexicon)),
        TextProvider::External(cfg) => {
            if text.trim().is_empty() {
                return Ok(SentimentResult::default());
            }
            let r: SentimentResult = call(cfg, "sentiment", text)?;
            if !r.is_valid() {
                return Err(Error::ProviderUnavailable(format!(
                    "service returned out-of-range sentiment ({}, {})",
                    r.score, r.magnitude
                )));
            }
            Ok(r)
        }
    }
}

fn call<T: serde::de::DeserializeOwned>(cfg: &ExternalConfig, op: &str, text: &str) -> Result<T> {
    let agent: ureq::Agent = ureq::Agent::config_builder()
        .timeout_global(Some(Duration::from_millis(cfg.timeout_ms)))
        .build()
        .into();
    let body = ServiceRequest { op, text };
    let mut last_err = String::new();
    for _ in 0..=cfg.retries {
        let mut req = agent.post(&cfg.endpoint);
        if let Some(key) = &cfg.key {
            req = req.header("Authorization", &format!("Bearer {key}"));
        }
        match req.send_json(&body) {
            Ok(mut resp) => match resp.body_mut().read_json::<T>() {
                Ok(v) => return Ok(v),
                Err(e) => last_err = format!("bad response: {e}"),
            },
            Err(e) => last_err = e.to_string(),
        }
    }
    Err(Error::ProviderUnavailable(format!("{}: {last_err}", cfg.endpoint)))
}
