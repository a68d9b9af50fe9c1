//! Per-source cleaning and filtering.

mod artifacts;
mod banned;
mod garbled;
mod simplify;

use std::ops::AddAssign;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use artifacts::{strip_artifacts, TABULAR_LINE_RATIO};
pub use banned::BannedWords;
pub use garbled::{garbled_counts, garbled_ratio, is_garbled, remove_garbled, ALLOWED_RANGES};
pub use simplify::{
    parse_table as parse_simplification_table, simplify_char, table_len as simplification_table_len, to_simplified,
};

use crate::error::ConfigError;
use crate::model::{CleanDocument, PolicyTable, RawDocument, SourcePolicy};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DropReason {
    Length,
    Garbled,
    Banned,
}

/// One line of the drop log.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DropRecord {
    pub id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Kept(CleanDocument),
    Dropped {
        id: String,
        reason: DropReason,
        /// Dictionary terms behind a `Banned` drop.
        matched: Vec<String>,
    },
}

impl Outcome {
    fn drop(id: &str, reason: DropReason) -> Outcome {
        Outcome::Dropped {
            id: id.to_string(),
            reason,
            matched: Vec::new(),
        }
    }

    pub fn kept(&self) -> Option<&CleanDocument> {
        match self {
            Outcome::Kept(d) => Some(d),
            Outcome::Dropped { .. } => None,
        }
    }

    pub fn drop_reason(&self) -> Option<DropReason> {
        match self {
            Outcome::Kept(_) => None,
            Outcome::Dropped { reason, .. } => Some(*reason),
        }
    }
}

/// Runs one document through its source policy.
///
/// The order is fixed: artifact stripping, optional simplification, garbled
/// check (drop above the ratio limit, otherwise delete garbled scalars),
/// banned-word check, then the length check on the cleaned text. Garbled
/// scalars are deleted for every source, limit or not.
pub fn apply_policy(doc: RawDocument, policy: &SourcePolicy, dictionary: &BannedWords) -> Outcome {
    debug_assert_eq!(doc.source, policy.source);
    let mut text = strip_artifacts(&doc.text);
    if policy.to_simplified {
        text = to_simplified(&text);
    }
    let ratio = garbled_ratio(&text);
    if let Some(max) = policy.garbled_ratio_max {
        if ratio > max {
            return Outcome::drop(&doc.id, DropReason::Garbled);
        }
    }
    let text = remove_garbled(&text);
    if policy.banned_word_filter {
        let (hit, matched) = dictionary.contains_banned(&text);
        if hit {
            return Outcome::Dropped {
                id: doc.id,
                reason: DropReason::Banned,
                matched,
            };
        }
    }
    let chars = text.chars().count();
    if chars < policy.min_chars {
        return Outcome::drop(&doc.id, DropReason::Length);
    }
    Outcome::Kept(CleanDocument::from_raw(doc, text, ratio))
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleanReport {
    pub input_docs: u64,
    pub kept: u64,
    pub dropped_length: u64,
    pub dropped_garbled: u64,
    pub dropped_banned: u64,
    /// Raw minus cleaned scalar count, summed over kept documents.
    pub chars_removed: u64,
}

impl CleanReport {
    fn record(raw_chars: usize, outcome: &Outcome) -> CleanReport {
        let mut r = CleanReport {
            input_docs: 1,
            ..Default::default()
        };
        match outcome {
            Outcome::Kept(d) => {
                r.kept = 1;
                r.chars_removed = raw_chars.saturating_sub(d.char_count) as u64;
            }
            Outcome::Dropped { reason, .. } => match reason {
                DropReason::Length => r.dropped_length = 1,
                DropReason::Garbled => r.dropped_garbled = 1,
                DropReason::Banned => r.dropped_banned = 1,
            },
        }
        r
    }

    pub fn is_balanced(&self) -> bool {
        self.kept + self.dropped_length + self.dropped_garbled + self.dropped_banned == self.input_docs
    }
}

impl AddAssign for CleanReport {
    fn add_assign(&mut self, o: CleanReport) {
        self.input_docs += o.input_docs;
        self.kept += o.kept;
        self.dropped_length += o.dropped_length;
        self.dropped_garbled += o.dropped_garbled;
        self.dropped_banned += o.dropped_banned;
        self.chars_removed += o.chars_removed;
    }
}

impl std::ops::Add for CleanReport {
    type Output = CleanReport;
    fn add(mut self, o: CleanReport) -> CleanReport {
        self += o;
        self
    }
}

/// Policy table plus dictionary, validated together.
#[derive(Debug, Clone)]
pub struct Cleaner {
    policies: PolicyTable,
    dictionary: BannedWords,
}

#[derive(Debug, Default)]
pub struct CleanOutput {
    pub kept: Vec<CleanDocument>,
    pub dropped: Vec<DropRecord>,
    pub report: CleanReport,
}

impl Cleaner {
    /// Fails when a policy enables the banned-word filter and no dictionary is
    /// supplied.
    pub fn new(policies: PolicyTable, dictionary: Option<BannedWords>) -> Result<Cleaner, ConfigError> {
        if dictionary.is_none() {
            if let Some(p) = policies.values().find(|p| p.banned_word_filter) {
                return Err(ConfigError::MissingFile {
                    path: "banned-word dictionary".into(),
                    reason: format!("policy for {} enables banned_word_filter", p.source),
                });
            }
        }
        Ok(Cleaner {
            policies,
            dictionary: dictionary.unwrap_or_else(BannedWords::empty),
        })
    }

    pub fn policy(&self, doc: &RawDocument) -> Result<&SourcePolicy, ConfigError> {
        self.policies
            .get(&doc.source)
            .ok_or_else(|| ConfigError::invalid(format!("policies.{}", doc.source), "no policy for source"))
    }

    pub fn apply(&self, doc: RawDocument) -> Result<(Outcome, CleanReport), ConfigError> {
        let policy = self.policy(&doc)?;
        let raw_chars = doc.text.chars().count();
        let outcome = apply_policy(doc, policy, &self.dictionary);
        let report = CleanReport::record(raw_chars, &outcome);
        Ok((outcome, report))
    }

    /// Cleans a batch in parallel. Output order follows input order.
    pub fn clean_all(&self, docs: Vec<RawDocument>) -> Result<CleanOutput, ConfigError> {
        let results: Vec<(Outcome, CleanReport)> =
            docs.into_par_iter().map(|d| self.apply(d)).collect::<Result<_, _>>()?;
        let mut out = CleanOutput::default();
        for (outcome, report) in results {
            out.report += report;
            match outcome {
                Outcome::Kept(d) => out.kept.push(d),
                Outcome::Dropped { id, reason, .. } => out.dropped.push(DropRecord { id, reason }),
            }
        }
        Ok(out)
    }
}
