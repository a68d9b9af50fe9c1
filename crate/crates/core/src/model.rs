//! Shared domain types: the sub-dataset taxonomy, documents and per-source policies.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::ConfigError;

/// One of the twelve sub-datasets. The first six feed pre-training, the rest
/// are supervised fine-tuning tasks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum SubDataset {
    CP,
    CA,
    RR,
    FN,
    SM,
    Wiki,
    SA,
    ED,
    TD,
    RS,
    QA,
    SP,
}

impl SubDataset {
    /// Pre-training sources in table order.
    pub const PRETRAINING: [SubDataset; 6] = [
        SubDataset::CP,
        SubDataset::CA,
        SubDataset::RR,
        SubDataset::FN,
        SubDataset::SM,
        SubDataset::Wiki,
    ];

    /// Fine-tuning tasks in table order.
    pub const SFT: [SubDataset; 6] = [
        SubDataset::SA,
        SubDataset::ED,
        SubDataset::TD,
        SubDataset::RS,
        SubDataset::QA,
        SubDataset::SP,
    ];

    pub fn all() -> impl Iterator<Item = SubDataset> {
        Self::PRETRAINING.into_iter().chain(Self::SFT)
    }

    pub fn tag(self) -> &'static str {
        match self {
            SubDataset::CP => "CP",
            SubDataset::CA => "CA",
            SubDataset::RR => "RR",
            SubDataset::FN => "FN",
            SubDataset::SM => "SM",
            SubDataset::Wiki => "Wiki",
            SubDataset::SA => "SA",
            SubDataset::ED => "ED",
            SubDataset::TD => "TD",
            SubDataset::RS => "RS",
            SubDataset::QA => "QA",
            SubDataset::SP => "SP",
        }
    }

    pub fn is_pretraining(self) -> bool {
        Self::PRETRAINING.contains(&self)
    }

    pub fn is_sft(self) -> bool {
        !self.is_pretraining()
    }
}

impl fmt::Display for SubDataset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown sub-dataset tag {0:?}")]
pub struct UnknownTag(pub String);

impl FromStr for SubDataset {
    type Err = UnknownTag;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        SubDataset::all()
            .find(|d| d.tag() == s)
            .ok_or_else(|| UnknownTag(s.to_string()))
    }
}

impl Serialize for SubDataset {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(self.tag())
    }
}

impl<'de> Deserialize<'de> for SubDataset {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// A source document as ingested, before any cleaning.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub source: SubDataset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
}

/// A document that survived its source policy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CleanDocument {
    pub id: String,
    pub source: SubDataset,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<String>,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub metadata: BTreeMap<String, String>,
    pub clean_text: String,
    /// Unicode scalar count of `clean_text`.
    pub char_count: usize,
    /// Garbled fraction measured before garbled scalars were removed.
    pub garbled_ratio: f64,
}

impl CleanDocument {
    pub fn from_raw(raw: RawDocument, clean_text: String, garbled_ratio: f64) -> Self {
        let char_count = clean_text.chars().count();
        CleanDocument {
            id: raw.id,
            source: raw.source,
            timestamp: raw.timestamp,
            text: raw.text,
            metadata: raw.metadata,
            clean_text,
            char_count,
            garbled_ratio,
        }
    }

    pub fn meta(&self, key: &str) -> Option<&str> {
        self.metadata.get(key).map(String::as_str)
    }
}

/// Cleaning and filtering configuration for one pre-training source.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourcePolicy {
    pub source: SubDataset,
    pub min_chars: usize,
    pub garbled_ratio_max: Option<f64>,
    pub banned_word_filter: bool,
    pub to_simplified: bool,
    pub dedup: bool,
}

impl SourcePolicy {
    /// The built-in thresholds for each pre-training source.
    pub fn default_for(source: SubDataset) -> SourcePolicy {
        let mut p = SourcePolicy {
            source,
            min_chars: 0,
            garbled_ratio_max: None,
            banned_word_filter: false,
            to_simplified: false,
            dedup: false,
        };
        match source {
            SubDataset::CP => p.min_chars = 10_000,
            SubDataset::CA => p.min_chars = 1_000,
            SubDataset::RR => p.min_chars = 2_000,
            SubDataset::FN => {
                p.min_chars = 100;
                p.dedup = true;
            }
            SubDataset::SM => {
                p.min_chars = 50;
                p.dedup = true;
                p.banned_word_filter = true;
                p.garbled_ratio_max = Some(0.30);
            }
            SubDataset::Wiki => p.to_simplified = true,
            _ => {}
        }
        p
    }
}

/// Policy table keyed by pre-training source.
pub type PolicyTable = BTreeMap<SubDataset, SourcePolicy>;

pub fn default_policies() -> PolicyTable {
    SubDataset::PRETRAINING
        .into_iter()
        .map(|s| (s, SourcePolicy::default_for(s)))
        .collect()
}

/// Builds the policy table from the `[policies.<SOURCE>]` sections of a
/// parsed config tree. Missing sections and fields keep their defaults.
pub fn load_policies(config: &toml::Table) -> Result<PolicyTable, ConfigError> {
    let mut table = default_policies();
    let Some(section) = config.get("policies") else {
        return Ok(table);
    };
    let section = section
        .as_table()
        .ok_or_else(|| ConfigError::invalid("policies", "expected a table"))?;
    for (name, body) in section {
        let source: SubDataset = name
            .parse()
            .map_err(|_| ConfigError::UnknownKey(format!("policies.{name}")))?;
        if !source.is_pretraining() {
            return Err(ConfigError::UnknownKey(format!("policies.{name}")));
        }
        let body = body
            .as_table()
            .ok_or_else(|| ConfigError::invalid(format!("policies.{name}"), "expected a table"))?;
        let policy = table.get_mut(&source).expect("all pretraining sources present");
        for (key, value) in body {
            let path = format!("policies.{name}.{key}");
            match key.as_str() {
                "min_chars" => {
                    let v = value
                        .as_integer()
                        .filter(|v| *v >= 0)
                        .ok_or_else(|| ConfigError::invalid(&path, "expected integer >= 0"))?;
                    policy.min_chars = v as usize;
                }
                "garbled_ratio_max" => {
                    // "none" disables the garbled drop rule
                    if value.as_str() == Some("none") {
                        policy.garbled_ratio_max = None;
                        continue;
                    }
                    let v = value
                        .as_float()
                        .or_else(|| value.as_integer().map(|i| i as f64))
                        .filter(|v| (0.0..=1.0).contains(v))
                        .ok_or_else(|| ConfigError::invalid(&path, "expected fraction in [0,1]"))?;
                    policy.garbled_ratio_max = Some(v);
                }
                "banned_word_filter" => policy.banned_word_filter = as_bool(value, &path)?,
                "to_simplified" => policy.to_simplified = as_bool(value, &path)?,
                "dedup" => policy.dedup = as_bool(value, &path)?,
                _ => return Err(ConfigError::UnknownKey(path)),
            }
        }
    }
    Ok(table)
}

fn as_bool(value: &toml::Value, path: &str) -> Result<bool, ConfigError> {
    value
        .as_bool()
        .ok_or_else(|| ConfigError::invalid(path, "expected boolean"))
}

/// Hierarchical event categories used for event-detection pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct EventTaxonomy {
    nodes: Vec<TaxonomyNode>,
    index: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, PartialEq)]
struct TaxonomyNode {
    label: String,
    parent: Option<usize>,
    children: Vec<usize>,
    level: usize,
}

pub const MAX_TAXONOMY_DEPTH: usize = 7;

impl EventTaxonomy {
    /// Parses an indented tree, one label per line. Each nesting level is two
    /// spaces or one tab; blank lines and `#` comments are ignored. Top-level
    /// lines sit at depth 1.
    pub fn parse(text: &str) -> Result<EventTaxonomy, ConfigError> {
        let mut nodes: Vec<TaxonomyNode> = Vec::new();
        let mut index = BTreeMap::new();
        // stack[i] = node at level i+1 on the current path
        let mut stack: Vec<usize> = Vec::new();
        for (lineno, line) in text.lines().enumerate() {
            let trimmed = line.trim_end();
            if trimmed.trim_start().is_empty() || trimmed.trim_start().starts_with('#') {
                continue;
            }
            let loc = format!("taxonomy line {}", lineno + 1);
            let mut spaces = 0usize;
            let mut rest = trimmed;
            loop {
                if let Some(r) = rest.strip_prefix('\t') {
                    spaces += 2;
                    rest = r;
                } else if let Some(r) = rest.strip_prefix(' ') {
                    spaces += 1;
                    rest = r;
                } else {
                    break;
                }
            }
            if !spaces.is_multiple_of(2) {
                return Err(ConfigError::invalid(loc, "odd indentation"));
            }
            let level = spaces / 2 + 1;
            if level > MAX_TAXONOMY_DEPTH {
                return Err(ConfigError::invalid(loc, "tree deeper than 7 levels"));
            }
            if level > stack.len() + 1 {
                return Err(ConfigError::invalid(loc, "indentation skips a level"));
            }
            let label = rest.to_string();
            if index.contains_key(&label) {
                return Err(ConfigError::invalid(loc, format!("duplicate label {label:?}")));
            }
            stack.truncate(level - 1);
            let id = nodes.len();
            let parent = stack.last().copied();
            if let Some(p) = parent {
                nodes[p].children.push(id);
            }
            nodes.push(TaxonomyNode {
                label: label.clone(),
                parent,
                children: Vec::new(),
                level,
            });
            index.insert(label, id);
            stack.push(id);
        }
        if nodes.is_empty() {
            return Err(ConfigError::invalid("taxonomy", "no categories"));
        }
        Ok(EventTaxonomy { nodes, index })
    }

    pub fn depth(&self) -> usize {
        self.nodes.iter().map(|n| n.level).max().unwrap_or(0)
    }

    pub fn leaf_count(&self) -> usize {
        self.nodes.iter().filter(|n| n.children.is_empty()).count()
    }

    pub fn leaves(&self) -> impl Iterator<Item = &str> {
        self.nodes
            .iter()
            .filter(|n| n.children.is_empty())
            .map(|n| n.label.as_str())
    }

    pub fn labels(&self) -> impl Iterator<Item = &str> {
        self.nodes.iter().map(|n| n.label.as_str())
    }

    pub fn contains(&self, label: &str) -> bool {
        self.index.contains_key(label)
    }

    /// True when `label` is `category` or lies beneath it.
    pub fn is_within(&self, label: &str, category: &str) -> bool {
        let (Some(&start), Some(&target)) = (self.index.get(label), self.index.get(category)) else {
            return false;
        };
        let mut cur = Some(start);
        while let Some(id) = cur {
            if id == target {
                return true;
            }
            cur = self.nodes[id].parent;
        }
        false
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tags_round_trip() {
        for d in SubDataset::all() {
            assert_eq!(d.tag().parse::<SubDataset>().unwrap(), d);
        }
        assert_eq!(SubDataset::PRETRAINING.len(), 6);
        assert_eq!(SubDataset::SFT.len(), 6);
        assert!("XX".parse::<SubDataset>().is_err());
    }

    #[test]
    fn default_thresholds() {
        let t = default_policies();
        assert_eq!(t[&SubDataset::CP].min_chars, 10_000);
        assert_eq!(t[&SubDataset::CA].min_chars, 1_000);
        assert_eq!(t[&SubDataset::RR].min_chars, 2_000);
        assert_eq!(t[&SubDataset::FN].min_chars, 100);
        assert!(t[&SubDataset::FN].dedup);
        let sm = &t[&SubDataset::SM];
        assert_eq!(sm.min_chars, 50);
        assert!(sm.dedup && sm.banned_word_filter);
        assert_eq!(sm.garbled_ratio_max, Some(0.30));
        assert!(t[&SubDataset::Wiki].to_simplified);
        assert_eq!(t.len(), 6);
    }

    #[test]
    fn empty_config_gives_defaults() {
        let cfg: toml::Table = "".parse().unwrap();
        assert_eq!(load_policies(&cfg).unwrap(), default_policies());
    }

    #[test]
    fn single_field_override() {
        let cfg: toml::Table = "[policies.SM]\nmin_chars = 60\n".parse().unwrap();
        let t = load_policies(&cfg).unwrap();
        assert_eq!(t[&SubDataset::SM].min_chars, 60);
        assert_eq!(t[&SubDataset::SM].garbled_ratio_max, Some(0.30));
        assert_eq!(t[&SubDataset::CP], SourcePolicy::default_for(SubDataset::CP));
    }

    #[test]
    fn unknown_source_is_named() {
        let cfg: toml::Table = "[policies.XX]\nmin_chars = 1\n".parse().unwrap();
        let err = load_policies(&cfg).unwrap_err();
        assert!(err.to_string().contains("XX"), "{err}");
    }

    #[test]
    fn bad_value_names_key() {
        let cfg: toml::Table = "[policies.CP]\nmin_chars = \"many\"\n".parse().unwrap();
        let err = load_policies(&cfg).unwrap_err();
        assert!(err.to_string().contains("policies.CP.min_chars"), "{err}");
    }

    #[test]
    fn taxonomy_parse() {
        let t = EventTaxonomy::parse("公司\n  并购\n    M&A\n  破产\n宏观\n").unwrap();
        assert_eq!(t.depth(), 3);
        assert_eq!(t.leaf_count(), 3);
        assert!(t.is_within("M&A", "公司"));
        assert!(!t.is_within("破产", "并购"));
        assert!(EventTaxonomy::parse("a\n    b\n").is_err());
        assert!(EventTaxonomy::parse("a\n  a\n").is_err());
    }
}
