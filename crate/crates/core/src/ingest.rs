//! Line-delimited record ingestion and the ingest manifest.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{ConfigError, IngestError};
use crate::html::extract_text_from_html;
use crate::model::{RawDocument, SubDataset};

#[derive(Debug, Deserialize)]
struct RecordLine {
    id: String,
    text: String,
    #[serde(default)]
    timestamp: Option<String>,
    #[serde(default)]
    metadata: Option<BTreeMap<String, String>>,
}

/// Parses one input line into a document. Rejects invalid UTF-8, schema
/// mismatches and empty ids.
pub fn parse_record_line(line: &[u8], source: SubDataset) -> Result<RawDocument, String> {
    let line = std::str::from_utf8(line).map_err(|e| format!("invalid utf-8: {e}"))?;
    let rec: RecordLine = serde_json::from_str(line).map_err(|e| e.to_string())?;
    if rec.id.is_empty() {
        return Err("empty id".into());
    }
    Ok(RawDocument {
        id: rec.id,
        source,
        timestamp: rec.timestamp,
        text: rec.text,
        metadata: rec.metadata.unwrap_or_default(),
    })
}

/// Streams documents from a line-delimited record file in file order.
///
/// Malformed lines (bad JSON, bad UTF-8, empty or repeated ids) are skipped
/// and counted. Blank lines are ignored. When the input is exhausted and more
/// than half of the non-blank lines were malformed, the stream ends with
/// [`IngestError::Corrupt`].
pub struct RecordStream<R> {
    reader: R,
    path: PathBuf,
    source: SubDataset,
    buf: Vec<u8>,
    total: usize,
    skipped: usize,
    seen: HashSet<String>,
    done: bool,
}

impl RecordStream<BufReader<File>> {
    pub fn open(path: impl AsRef<Path>, source: SubDataset) -> Result<Self, IngestError> {
        let path = path.as_ref().to_path_buf();
        let file = File::open(&path).map_err(|source| IngestError::Io {
            path: path.clone(),
            source,
        })?;
        Ok(RecordStream::new(BufReader::new(file), path, source))
    }
}

impl<R: BufRead> RecordStream<R> {
    pub fn new(reader: R, path: impl Into<PathBuf>, source: SubDataset) -> Self {
        RecordStream {
            reader,
            path: path.into(),
            source,
            buf: Vec::new(),
            total: 0,
            skipped: 0,
            seen: HashSet::new(),
            done: false,
        }
    }

    pub fn skip_count(&self) -> usize {
        self.skipped
    }

    pub fn line_count(&self) -> usize {
        self.total
    }
}

impl<R: BufRead> Iterator for RecordStream<R> {
    type Item = Result<RawDocument, IngestError>;

    fn next(&mut self) -> Option<Self::Item> {
        if self.done {
            return None;
        }
        loop {
            self.buf.clear();
            match self.reader.read_until(b'\n', &mut self.buf) {
                Ok(0) => {
                    self.done = true;
                    if self.skipped * 2 > self.total {
                        return Some(Err(IngestError::Corrupt {
                            path: self.path.clone(),
                            malformed: self.skipped,
                            total: self.total,
                        }));
                    }
                    return None;
                }
                Ok(_) => {}
                Err(source) => {
                    self.done = true;
                    return Some(Err(IngestError::Io {
                        path: self.path.clone(),
                        source,
                    }));
                }
            }
            let line = trim_line(&self.buf);
            if line.iter().all(u8::is_ascii_whitespace) {
                continue;
            }
            self.total += 1;
            match parse_record_line(line, self.source) {
                Ok(doc) if self.seen.insert(doc.id.clone()) => return Some(Ok(doc)),
                _ => self.skipped += 1,
            }
        }
    }
}

fn trim_line(buf: &[u8]) -> &[u8] {
    let mut end = buf.len();
    while end > 0 && matches!(buf[end - 1], b'\n' | b'\r') {
        end -= 1;
    }
    &buf[..end]
}

/// Convenience wrapper: collects a record file, returning documents and the
/// skip count.
pub fn read_record_stream(
    path: impl AsRef<Path>,
    source: SubDataset,
) -> Result<(Vec<RawDocument>, usize), IngestError> {
    let mut stream = RecordStream::open(path, source)?;
    let docs = stream.by_ref().collect::<Result<Vec<_>, _>>()?;
    Ok((docs, stream.skip_count()))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InputFormat {
    Jsonl,
    Html,
    Txt,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: PathBuf,
    pub source: SubDataset,
    pub format: InputFormat,
}

/// The list of input files for an ingest run.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct IngestManifest {
    #[serde(default)]
    pub entries: Vec<ManifestEntry>,
}

impl IngestManifest {
    /// Parses a TOML manifest with `[[entries]]` tables. Relative paths are
    /// resolved against `base`.
    pub fn parse(text: &str, base: &Path) -> Result<IngestManifest, ConfigError> {
        let mut m: IngestManifest = toml::from_str(text).map_err(|e| ConfigError::Parse(e.to_string()))?;
        for e in &mut m.entries {
            if e.path.is_relative() {
                e.path = base.join(&e.path);
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<IngestManifest, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::MissingFile {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        let m = IngestManifest::parse(&text, base)?;
        m.check_readable()?;
        Ok(m)
    }

    pub fn check_readable(&self) -> Result<(), ConfigError> {
        for e in &self.entries {
            File::open(&e.path).map_err(|err| ConfigError::MissingFile {
                path: e.path.clone(),
                reason: err.to_string(),
            })?;
        }
        Ok(())
    }
}

/// Outcome of ingesting one manifest entry.
#[derive(Debug, Default)]
pub struct IngestedFile {
    pub docs: Vec<RawDocument>,
    pub skipped: usize,
}

/// Reads one manifest entry. HTML and text files become a single document
/// whose id is the file stem.
pub fn ingest_entry(entry: &ManifestEntry) -> Result<IngestedFile, IngestError> {
    match entry.format {
        InputFormat::Jsonl => {
            let (docs, skipped) = read_record_stream(&entry.path, entry.source)?;
            Ok(IngestedFile { docs, skipped })
        }
        InputFormat::Html | InputFormat::Txt => {
            let bytes = std::fs::read(&entry.path).map_err(|source| IngestError::Io {
                path: entry.path.clone(),
                source,
            })?;
            let Ok(text) = String::from_utf8(bytes) else {
                return Ok(IngestedFile {
                    docs: vec![],
                    skipped: 1,
                });
            };
            let text = if entry.format == InputFormat::Html {
                extract_text_from_html(&text)
            } else {
                text
            };
            let id = entry
                .path
                .file_stem()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            let mut metadata = BTreeMap::new();
            let name = entry
                .path
                .file_name()
                .map(|s| s.to_string_lossy().into_owned())
                .unwrap_or_default();
            metadata.insert("file".to_string(), name);
            Ok(IngestedFile {
                docs: vec![RawDocument {
                    id,
                    source: entry.source,
                    timestamp: None,
                    text,
                    metadata,
                }],
                skipped: 0,
            })
        }
    }
}
