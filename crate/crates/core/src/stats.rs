//! Corpus statistics in the layout of a dataset card table.
//!
//! Counts are kept as exact integers; per-document ratios, token shares and
//! storage are derived on demand and rounded only when rendered.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::model::{CleanDocument, SubDataset};
use crate::sft::InstructionPair;
use crate::tokenizer::{TokenizeError, Tokenizer};

const GIB: f64 = (1u64 << 30) as f64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Section {
    Pretraining,
    Sft,
}

impl Section {
    pub fn of(source: SubDataset) -> Section {
        if source.is_pretraining() {
            Section::Pretraining
        } else {
            Section::Sft
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Section::Pretraining => "Pretraining",
            Section::Sft => "SFT",
        }
    }
}

/// Row key: a sub-dataset or a section total.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RowKey {
    Source(SubDataset),
    Total(Section),
}

impl fmt::Display for RowKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RowKey::Source(s) => f.write_str(s.tag()),
            RowKey::Total(s) => f.write_str(s.label()),
        }
    }
}

impl FromStr for RowKey {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "Pretraining" => Ok(RowKey::Total(Section::Pretraining)),
            "SFT" => Ok(RowKey::Total(Section::Sft)),
            other => other.parse().map(RowKey::Source).map_err(|e| e.to_string()),
        }
    }
}

/// Raw counters for one row. Merging is a commutative monoid.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct Counts {
    pub docs: u64,
    pub chars: u64,
    pub tokens: u64,
    pub bytes: u64,
}

impl std::ops::AddAssign for Counts {
    fn add_assign(&mut self, o: Counts) {
        self.docs += o.docs;
        self.chars += o.chars;
        self.tokens += o.tokens;
        self.bytes += o.bytes;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub key: RowKey,
    pub counts: Counts,
    /// Token total of the row's section, the `% Token` denominator.
    pub section_tokens: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl CorpusStats {
    pub fn chars_per_doc(&self) -> f64 {
        ratio(self.counts.chars, self.counts.docs)
    }

    pub fn tokens_per_doc(&self) -> f64 {
        ratio(self.counts.tokens, self.counts.docs)
    }

    pub fn pct_tokens(&self) -> f64 {
        100.0 * ratio(self.counts.tokens, self.section_tokens)
    }

    pub fn storage_gb(&self) -> f64 {
        self.counts.bytes as f64 / GIB
    }
}

/// Accumulates per-source counters.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StatsAccumulator {
    rows: BTreeMap<SubDataset, Counts>,
}

impl StatsAccumulator {
    pub fn add(&mut self, source: SubDataset, counts: Counts) {
        *self.rows.entry(source).or_default() += counts;
    }

    pub fn merge(mut self, other: StatsAccumulator) -> StatsAccumulator {
        for (s, c) in other.rows {
            self.add(s, c);
        }
        self
    }

    pub fn finish(&self) -> StatsTable {
        let mut sections = Vec::new();
        for section in [Section::Pretraining, Section::Sft] {
            let order = match section {
                Section::Pretraining => SubDataset::PRETRAINING,
                Section::Sft => SubDataset::SFT,
            };
            let present: Vec<(SubDataset, Counts)> = order
                .into_iter()
                .filter_map(|s| self.rows.get(&s).map(|c| (s, *c)))
                .collect();
            if present.is_empty() {
                continue;
            }
            let mut total = Counts::default();
            for (_, c) in &present {
                total += *c;
            }
            let rows = present
                .into_iter()
                .map(|(s, counts)| CorpusStats {
                    key: RowKey::Source(s),
                    counts,
                    section_tokens: total.tokens,
                })
                .collect();
            sections.push(SectionStats {
                total: CorpusStats {
                    key: RowKey::Total(section),
                    counts: total,
                    section_tokens: total.tokens,
                },
                rows,
            });
        }
        StatsTable { sections }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SectionStats {
    pub total: CorpusStats,
    pub rows: Vec<CorpusStats>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct StatsTable {
    pub sections: Vec<SectionStats>,
}

impl StatsTable {
    /// Builds a table from pre-aggregated counts.
    pub fn from_counts(rows: impl IntoIterator<Item = (SubDataset, Counts)>) -> StatsTable {
        let mut acc = StatsAccumulator::default();
        for (s, c) in rows {
            acc.add(s, c);
        }
        acc.finish()
    }

    /// All rows, each section's total first.
    pub fn rows(&self) -> impl Iterator<Item = &CorpusStats> {
        self.sections
            .iter()
            .flat_map(|s| std::iter::once(&s.total).chain(&s.rows))
    }

    pub fn row(&self, key: RowKey) -> Option<&CorpusStats> {
        self.rows().find(|r| r.key == key)
    }
}

/// Counts scalars, tokens and UTF-8 bytes of each document's cleaned text.
pub fn compute_stats<T: Tokenizer + ?Sized>(docs: &[CleanDocument], tok: &T) -> Result<StatsTable, TokenizeError> {
    let acc = docs
        .par_iter()
        .map(|d| {
            let counts = Counts {
                docs: 1,
                chars: d.clean_text.chars().count() as u64,
                tokens: tok.count_tokens(&d.clean_text)? as u64,
                bytes: d.clean_text.len() as u64,
            };
            let mut a = StatsAccumulator::default();
            a.add(d.source, counts);
            Ok(a)
        })
        .try_reduce(StatsAccumulator::default, |a, b| Ok(a.merge(b)))?;
    Ok(acc.finish())
}

/// Same for instruction pairs; a pair's text is instruction, input and output.
pub fn compute_pair_stats<T: Tokenizer + ?Sized>(
    pairs: &[InstructionPair],
    tok: &T,
) -> Result<StatsTable, TokenizeError> {
    let acc = pairs
        .par_iter()
        .map(|p| {
            let parts = [&p.instruction, &p.input, &p.output];
            let mut counts = Counts {
                docs: 1,
                ..Default::default()
            };
            for part in parts {
                counts.chars += part.chars().count() as u64;
                counts.tokens += tok.count_tokens(part)? as u64;
                counts.bytes += part.len() as u64;
            }
            let mut a = StatsAccumulator::default();
            a.add(p.task, counts);
            Ok(a)
        })
        .try_reduce(StatsAccumulator::default, |a, b| Ok(a.merge(b)))?;
    Ok(acc.finish())
}

/// Integer with comma thousands separators.
pub fn group_thousands(n: u64) -> String {
    let digits = n.to_string();
    let mut out = String::with_capacity(digits.len() + digits.len() / 3);
    for (i, c) in digits.chars().enumerate() {
        if i > 0 && (digits.len() - i).is_multiple_of(3) {
            out.push(',');
        }
        out.push(c);
    }
    out
}

const HEADER: [&str; 8] = [
    "Dataset",
    "# Docs",
    "# Chars",
    "# Tokens",
    "Chars/Doc",
    "Tokens/Doc",
    "% Token",
    "Storage (GB)",
];

/// Fixed-width text table: one header line, then each section's total row
/// followed by its sub-dataset rows.
pub fn format_table(table: &StatsTable) -> String {
    let cells: Vec<[String; 8]> = table
        .rows()
        .map(|r| {
            [
                r.key.to_string(),
                group_thousands(r.counts.docs),
                group_thousands(r.counts.chars),
                group_thousands(r.counts.tokens),
                group_thousands(r.chars_per_doc().round() as u64),
                group_thousands(r.tokens_per_doc().round() as u64),
                format!("{:.2}", r.pct_tokens()),
                format!("{:.2}", r.storage_gb()),
            ]
        })
        .collect();
    let mut widths = HEADER.map(str::len);
    for row in &cells {
        for (w, c) in widths.iter_mut().zip(row) {
            *w = (*w).max(c.chars().count());
        }
    }
    let mut out = String::new();
    let mut line = |cols: &[String]| {
        let mut s = String::new();
        for (i, (c, w)) in cols.iter().zip(widths).enumerate() {
            if i == 0 {
                write!(s, "{c:<w$}").unwrap();
            } else {
                write!(s, "  {c:>w$}").unwrap();
            }
        }
        out.push_str(s.trim_end());
        out.push('\n');
    };
    line(&HEADER.map(String::from));
    for row in &cells {
        line(row);
    }
    out
}

/// Machine-readable row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatsRow {
    pub source: String,
    pub docs: u64,
    pub chars: u64,
    pub tokens: u64,
    pub bytes: u64,
    pub section_tokens: u64,
    pub chars_per_doc: f64,
    pub tokens_per_doc: f64,
    pub pct_tokens: f64,
    pub storage_gb: f64,
}

impl From<&CorpusStats> for StatsRow {
    fn from(r: &CorpusStats) -> StatsRow {
        StatsRow {
            source: r.key.to_string(),
            docs: r.counts.docs,
            chars: r.counts.chars,
            tokens: r.counts.tokens,
            bytes: r.counts.bytes,
            section_tokens: r.section_tokens,
            chars_per_doc: r.chars_per_doc(),
            tokens_per_doc: r.tokens_per_doc(),
            pct_tokens: r.pct_tokens(),
            storage_gb: r.storage_gb(),
        }
    }
}

/// One JSON object per row, same order as [`format_table`].
pub fn format_rows(table: &StatsTable) -> String {
    let mut out = String::new();
    for r in table.rows() {
        out.push_str(&serde_json::to_string(&StatsRow::from(r)).expect("rows serialize"));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsParseError {
    #[error("line {0}: {1}")]
    Syntax(usize, String),
    #[error("line {0}: derived column {1} disagrees with raw counts")]
    Inconsistent(usize, &'static str),
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9 * a.abs().max(b.abs()).max(1.0)
}

/// Parses rows written by [`format_rows`], checking every derived column
/// against the raw counts.
pub fn parse_rows(text: &str) -> Result<Vec<CorpusStats>, StatsParseError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let n = i + 1;
        let row: StatsRow = serde_json::from_str(line).map_err(|e| StatsParseError::Syntax(n, e.to_string()))?;
        let key: RowKey = row.source.parse().map_err(|e| StatsParseError::Syntax(n, e))?;
        let stats = CorpusStats {
            key,
            counts: Counts {
                docs: row.docs,
                chars: row.chars,
                tokens: row.tokens,
                bytes: row.bytes,
            },
            section_tokens: row.section_tokens,
        };
        for (name, got, want) in [
            ("chars_per_doc", row.chars_per_doc, stats.chars_per_doc()),
            ("tokens_per_doc", row.tokens_per_doc, stats.tokens_per_doc()),
            ("pct_tokens", row.pct_tokens, stats.pct_tokens()),
            ("storage_gb", row.storage_gb, stats.storage_gb()),
        ] {
            if !close(got, want) {
                return Err(StatsParseError::Inconsistent(n, name));
            }
        }
        out.push(stats);
    }
    Ok(out)
}
