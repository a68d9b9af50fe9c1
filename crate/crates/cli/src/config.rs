//! Run configuration: one TOML file with `policies`, `dedup`, `pack`, `sft`
//! and `files` sections. Every section is optional.

use std::path::{Path, PathBuf};

use fcf_core::batch::{DEFAULT_MAX_INPUT_TOKENS, DEFAULT_TOKEN_BUDGET};
use fcf_core::clean::BannedWords;
use fcf_core::dedup::DedupParams;
use fcf_core::model::{load_policies, PolicyTable};
use fcf_core::pack::{check_window_params, DEFAULT_WINDOW_GAP, DEFAULT_WINDOW_LEN};
use fcf_core::sft::{RatingMap, SpLabelStyle};
use fcf_core::{ConfigError, EventTaxonomy};
use serde::{Deserialize, Serialize};

use crate::manifest::sha256_hex;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DedupSection {
    pub k: usize,
    pub num_hashes: usize,
    pub bands: usize,
    pub rows_per_band: usize,
    pub threshold: f64,
    pub cross_source: bool,
}

impl Default for DedupSection {
    fn default() -> Self {
        let d = DedupParams::default();
        DedupSection {
            k: d.k,
            num_hashes: d.num_hashes,
            bands: d.bands,
            rows_per_band: d.rows_per_band,
            threshold: d.threshold,
            cross_source: d.cross_source,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PackSection {
    pub window_len: usize,
    pub window_gap: usize,
    /// Shuffle documents with the run seed after sorting by id.
    pub shuffle: bool,
}

impl Default for PackSection {
    fn default() -> Self {
        PackSection {
            window_len: DEFAULT_WINDOW_LEN,
            window_gap: DEFAULT_WINDOW_GAP,
            shuffle: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SftSection {
    pub max_input_tokens: usize,
    pub token_budget: usize,
    pub sp_labels: SpLabelStyle,
    pub ed_negatives_per_positive: usize,
}

impl Default for SftSection {
    fn default() -> Self {
        SftSection {
            max_input_tokens: DEFAULT_MAX_INPUT_TOKENS,
            token_budget: DEFAULT_TOKEN_BUDGET,
            sp_labels: SpLabelStyle::Movement,
            ed_negatives_per_positive: 1,
        }
    }
}

/// External data files. Relative paths resolve against the config file.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FilesSection {
    pub banned_words: Option<PathBuf>,
    pub ratings: Option<PathBuf>,
    pub taxonomy: Option<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub policies: PolicyTable,
    pub dedup: DedupSection,
    pub pack: PackSection,
    pub sft: SftSection,
    #[serde(skip)]
    pub files: FilesSection,
}

const SECTIONS: [&str; 5] = ["policies", "dedup", "pack", "sft", "files"];

fn section<T: for<'de> Deserialize<'de> + Default>(table: &toml::Table, name: &str) -> Result<T, ConfigError> {
    match table.get(name) {
        None => Ok(T::default()),
        Some(v) => v
            .clone()
            .try_into()
            .map_err(|e: toml::de::Error| ConfigError::Parse(format!("[{name}] {}", e.message()))),
    }
}

impl RunConfig {
    pub fn parse(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
        let table: toml::Table = text
            .parse()
            .map_err(|e: toml::de::Error| ConfigError::Parse(e.message().to_string()))?;
        if let Some(key) = table.keys().find(|k| !SECTIONS.contains(&k.as_str())) {
            return Err(ConfigError::UnknownKey(key.clone()));
        }
        let mut files: FilesSection = section(&table, "files")?;
        for p in [&mut files.banned_words, &mut files.ratings, &mut files.taxonomy]
            .into_iter()
            .flatten()
        {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        let cfg = RunConfig {
            policies: load_policies(&table)?,
            dedup: section(&table, "dedup")?,
            pack: section(&table, "pack")?,
            sft: section(&table, "sft")?,
            files,
        };
        cfg.dedup_params(0).validate()?;
        check_window_params(cfg.pack.window_len, cfg.pack.window_gap)?;
        if cfg.sft.token_budget == 0 {
            return Err(ConfigError::invalid("sft.token_budget", "must be positive"));
        }
        Ok(cfg)
    }

    pub fn load(path: Option<&Path>) -> Result<RunConfig, ConfigError> {
        let Some(path) = path else {
            return RunConfig::parse("", Path::new("."));
        };
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        RunConfig::parse(&text, path.parent().unwrap_or(Path::new(".")))
    }

    /// Digest of the resolved configuration, defaults included.
    pub fn digest(&self) -> String {
        sha256_hex(serde_json::to_string(self).expect("config serializes").as_bytes())
    }

    pub fn dedup_params(&self, seed: u64) -> DedupParams {
        DedupParams {
            k: self.dedup.k,
            num_hashes: self.dedup.num_hashes,
            bands: self.dedup.bands,
            rows_per_band: self.dedup.rows_per_band,
            threshold: self.dedup.threshold,
            seed,
            cross_source: self.dedup.cross_source,
        }
    }

    pub fn banned_words(&self) -> Result<Option<BannedWords>, ConfigError> {
        self.files.banned_words.as_deref().map(BannedWords::load).transpose()
    }

    pub fn ratings(&self) -> Result<RatingMap, ConfigError> {
        let path = self.files.ratings.as_deref().ok_or_else(|| ConfigError::MissingFile {
            path: "rating map".into(),
            reason: "files.ratings is not set".into(),
        })?;
        RatingMap::parse(&read(path)?)
    }

    pub fn taxonomy(&self) -> Result<EventTaxonomy, ConfigError> {
        let path = self.files.taxonomy.as_deref().ok_or_else(|| ConfigError::MissingFile {
            path: "event taxonomy".into(),
            reason: "files.taxonomy is not set".into(),
        })?;
        EventTaxonomy::parse(&read(path)?)
    }
}

fn read(path: &Path) -> Result<String, ConfigError> {
    std::fs::read_to_string(path).map_err(|e| ConfigError::MissingFile {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}
