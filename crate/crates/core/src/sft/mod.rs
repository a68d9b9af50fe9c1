//! Supervised fine-tuning pair construction.

mod builders;
pub mod template;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use builders::*;
pub use template::{content_slot, render_prompt, slot_names, template_for, TemplateError};

use crate::error::ConfigError;
use crate::model::SubDataset;

/// One instruction pair. Serializes to exactly
/// `{"task", "instruction", "input", "output", "provenance"}`.
///
/// All slot content is folded into `instruction`, so `input` is empty for
/// pairs built here. The slot values are kept in memory for truncation but
/// are not serialized.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstructionPair {
    pub task: SubDataset,
    pub instruction: String,
    pub input: String,
    pub output: String,
    pub provenance: Vec<String>,
    #[serde(skip)]
    pub slots: BTreeMap<String, String>,
}

impl InstructionPair {
    pub fn new(
        task: SubDataset,
        slots: BTreeMap<String, String>,
        output: String,
        provenance: Vec<String>,
    ) -> Result<InstructionPair, TemplateError> {
        let instruction = render_prompt(task, &slots)?;
        Ok(InstructionPair {
            task,
            instruction,
            input: String::new(),
            output,
            provenance,
            slots,
        })
    }

    /// Re-renders `instruction` from the current slots.
    pub fn rerender(&mut self) -> Result<(), TemplateError> {
        self.instruction = render_prompt(self.task, &self.slots)?;
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Sentiment {
    Positive,
    Negative,
    Neutral,
}

impl Sentiment {
    pub fn as_str(self) -> &'static str {
        match self {
            Sentiment::Positive => "Positive",
            Sentiment::Negative => "Negative",
            Sentiment::Neutral => "Neutral",
        }
    }
}

impl fmt::Display for Sentiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Sentiment {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Positive" => Ok(Sentiment::Positive),
            "Negative" => Ok(Sentiment::Negative),
            "Neutral" => Ok(Sentiment::Neutral),
            other => Err(format!("invalid sentiment label {other:?}")),
        }
    }
}

/// Next-day movement class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MovementLabel {
    Descend,
    Hold,
    Ascend,
}

impl MovementLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            MovementLabel::Ascend => "Ascend",
            MovementLabel::Descend => "Descend",
            MovementLabel::Hold => "Hold",
        }
    }

    pub fn as_sentiment(self) -> Sentiment {
        match self {
            MovementLabel::Ascend => Sentiment::Positive,
            MovementLabel::Descend => Sentiment::Negative,
            MovementLabel::Hold => Sentiment::Neutral,
        }
    }
}

/// Change-rate magnitude beyond which a move counts as up or down (0.50%).
pub const MOVEMENT_THRESHOLD: f64 = 0.0050;

#[derive(Debug, Clone, Copy, PartialEq, thiserror::Error)]
#[error("change rate {0} is not finite")]
pub struct NonFiniteRate(pub f64);

/// `rate > 0.5%` is Ascend, `rate < -0.5%` is Descend, anything else Hold.
pub fn label_movement(rate: f64) -> Result<MovementLabel, NonFiniteRate> {
    if !rate.is_finite() {
        return Err(NonFiniteRate(rate));
    }
    Ok(if rate > MOVEMENT_THRESHOLD {
        MovementLabel::Ascend
    } else if rate < -MOVEMENT_THRESHOLD {
        MovementLabel::Descend
    } else {
        MovementLabel::Hold
    })
}

/// How stock-movement outputs are spelled.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SpLabelStyle {
    /// Ascend / Descend / Hold
    #[default]
    Movement,
    /// Positive / Negative / Neutral, matching the answer set in the prompt
    Sentiment,
}

/// Analyst rating vocabulary mapped to sentiment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct RatingMap(BTreeMap<String, Sentiment>);

impl RatingMap {
    /// `rating<TAB>sentiment` per line; blank lines and `#` comments skipped.
    pub fn parse(text: &str) -> Result<RatingMap, ConfigError> {
        let mut map = BTreeMap::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let key = format!("rating map line {}", n + 1);
            let (rating, sentiment) = line
                .split_once('\t')
                .ok_or_else(|| ConfigError::invalid(&key, "expected rating<TAB>sentiment"))?;
            let sentiment = sentiment
                .trim()
                .parse()
                .map_err(|e: String| ConfigError::invalid(&key, e))?;
            map.insert(rating.trim().to_string(), sentiment);
        }
        Ok(RatingMap(map))
    }

    pub fn from_pairs<'a>(pairs: impl IntoIterator<Item = (&'a str, Sentiment)>) -> RatingMap {
        RatingMap(pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect())
    }

    pub fn get(&self, rating: &str) -> Option<Sentiment> {
        self.0.get(rating.trim()).copied()
    }
}
