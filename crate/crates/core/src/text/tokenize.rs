use serde::{Deserialize, Serialize};

use super::porter;

/// Lowercase alphanumeric tokens, none empty.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct TokenList(Vec<String>);

impl TokenList {
    pub fn as_slice(&self) -> &[String] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn into_vec(self) -> Vec<String> {
        self.0
    }

    pub fn join(&self, sep: &str) -> String {
        self.0.join(sep)
    }
}

impl<'a> IntoIterator for &'a TokenList {
    type Item = &'a String;
    type IntoIter = std::slice::Iter<'a, String>;

    fn into_iter(self) -> Self::IntoIter {
        self.0.iter()
    }
}

/// Lowercases and splits on every non-alphanumeric character.
pub fn tokenize(text: &str) -> TokenList {
    TokenList(
        text.to_lowercase()
            .split(|c: char| !c.is_alphanumeric())
            .filter(|t| !t.is_empty())
            .map(str::to_string)
            .collect(),
    )
}

/// Replaces each token with its Porter stem.
pub fn stem_tokens(tokens: &TokenList) -> TokenList {
    TokenList(tokens.0.iter().map(|t| porter::stem(t)).collect())
}

/// Stemmed tokens sorted, so word order does not matter.
pub fn stemmed_multiset(text: &str) -> Vec<String> {
    let mut stems = stem_tokens(&tokenize(text)).into_vec();
    stems.sort_unstable();
    stems
}
