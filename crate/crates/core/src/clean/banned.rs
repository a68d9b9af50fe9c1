//! Banned-word dictionary matching.

use std::path::Path;

use aho_corasick::AhoCorasick;

use crate::error::ConfigError;

/// A substring dictionary. Matching is plain substring search over the whole
/// text, so a term hits even inside a longer word.
#[derive(Debug, Clone)]
pub struct BannedWords {
    terms: Vec<String>,
    matcher: Option<AhoCorasick>,
}

impl BannedWords {
    pub fn new(terms: impl IntoIterator<Item = String>) -> BannedWords {
        let mut terms: Vec<String> = terms.into_iter().filter(|t| !t.is_empty()).collect();
        terms.sort();
        terms.dedup();
        let matcher = if terms.is_empty() {
            None
        } else {
            Some(AhoCorasick::new(&terms).expect("dictionary within automaton limits"))
        };
        BannedWords { terms, matcher }
    }

    pub fn empty() -> BannedWords {
        BannedWords::new(Vec::new())
    }

    /// One term per line; `#` starts a comment line; surrounding whitespace
    /// is trimmed.
    pub fn parse(text: &str) -> BannedWords {
        BannedWords::new(
            text.lines()
                .map(str::trim)
                .filter(|l| !l.is_empty() && !l.starts_with('#'))
                .map(str::to_string),
        )
    }

    pub fn load(path: &Path) -> Result<BannedWords, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        Ok(BannedWords::parse(&text))
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Whether any term occurs in `text`, plus every distinct matched term in
    /// dictionary order.
    pub fn contains_banned(&self, text: &str) -> (bool, Vec<String>) {
        let Some(matcher) = &self.matcher else {
            return (false, Vec::new());
        };
        let mut hit = vec![false; self.terms.len()];
        for m in matcher.find_overlapping_iter(text) {
            hit[m.pattern().as_usize()] = true;
        }
        let matched: Vec<String> = self
            .terms
            .iter()
            .zip(hit)
            .filter(|&(_, h)| h)
            .map(|(t, _)| t.clone())
            .collect();
        (!matched.is_empty(), matched)
    }
}
