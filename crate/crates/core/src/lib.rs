//! Corpus curation for Chinese financial LLM training data.
//!
//! The pipeline runs in stages that each consume and produce line-delimited
//! files: ingestion, per-source cleaning, near-duplicate removal, fine-tuning
//! pair construction, batch planning, fixed-length window packing and corpus
//! statistics. Every stage is deterministic for a given input order and seed.

pub mod batch;
pub mod clean;
pub mod dedup;
pub mod error;
pub mod html;
pub mod ingest;
pub mod model;
pub mod pack;
pub mod sft;
pub mod stats;
pub mod tokenizer;

pub use error::{ConfigError, IngestError, RecordError};
pub use model::{CleanDocument, EventTaxonomy, RawDocument, SourcePolicy, SubDataset};
