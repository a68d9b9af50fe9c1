//! One function per subcommand. Each reads its inputs, writes its outputs and
//! a run manifest, and returns the manifest.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use fcf_core::batch::{plan_batches, truncate_pair, Batch};
use fcf_core::clean::Cleaner;
use fcf_core::dedup::dedup_corpus;
use fcf_core::ingest::{ingest_entry, IngestManifest};
use fcf_core::pack::{build_token_stream, order_documents, window_count, windows, write_window_file, WindowFileHeader};
use fcf_core::sft::{
    build_ed, build_qa, build_rs, build_sa, build_sp, build_td, BuildOutput, EdOptions, InstructionPair,
    LabeledDocument, QaRecord, SpRecord,
};
use fcf_core::stats::{compute_pair_stats, compute_stats, format_rows, format_table, StatsTable};
use fcf_core::tokenizer::{ByteTokenizer, Tokenizer};
use fcf_core::{CleanDocument, RawDocument, SubDataset};
use log::info;
use serde_json::json;

use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::io::{read_jsonl, side_path, write_jsonl};
use crate::manifest::{verify_input, FileDigest, RunManifest};

pub struct Context {
    pub config: RunConfig,
    pub config_digest: String,
    pub seed: u64,
}

impl Context {
    pub fn new(config: RunConfig, seed: u64) -> Context {
        let config_digest = config.digest();
        Context {
            config,
            config_digest,
            seed,
        }
    }

    fn manifest(&self, stage: &str, inputs: &[&Path]) -> Result<RunManifest> {
        let mut m = RunManifest::new(stage, self.seed, self.config_digest.clone());
        for p in inputs {
            m.inputs.push(FileDigest::of(p)?);
        }
        Ok(m)
    }
}

fn progress(stage: &str, counts: &BTreeMap<String, u64>) {
    info!("{}", json!({"stage": stage, "counts": counts}));
}

fn tokenizer() -> ByteTokenizer {
    ByteTokenizer
}

fn keep_source<'a, T>(items: Vec<T>, source: Option<SubDataset>, of: impl Fn(&T) -> SubDataset + 'a) -> Vec<T> {
    match source {
        Some(s) => items.into_iter().filter(|d| of(d) == s).collect(),
        None => items,
    }
}

pub fn cmd_ingest(ctx: &Context, input: &Path, out: &Path, source: Option<SubDataset>) -> Result<RunManifest> {
    if !input.exists() {
        return Err(CliError::io(input, std::io::Error::from(std::io::ErrorKind::NotFound)));
    }
    let manifest = IngestManifest::load(input)?;
    let entries: Vec<_> = manifest
        .entries
        .iter()
        .filter(|e| source.is_none_or(|s| e.source == s))
        .collect();
    let mut docs: Vec<RawDocument> = Vec::new();
    let mut counts = BTreeMap::new();
    let mut skipped = 0u64;
    for e in &entries {
        let file = ingest_entry(e)?;
        skipped += file.skipped as u64;
        *counts.entry(format!("docs.{}", e.source)).or_insert(0) += file.docs.len() as u64;
        docs.extend(file.docs);
    }
    let mut seen = BTreeSet::new();
    for d in &docs {
        if !seen.insert(d.id.as_str()) {
            return Err(CliError::data(format!(
                "document id {:?} appears more than once in this run",
                d.id
            )));
        }
    }
    counts.insert("docs".into(), docs.len() as u64);
    counts.insert("skipped_lines".into(), skipped);
    write_jsonl(out, &docs)?;
    progress("ingest", &counts);
    let mut inputs: Vec<&Path> = vec![input];
    inputs.extend(entries.iter().map(|e| e.path.as_path()));
    let mut m = ctx.manifest("ingest", &inputs)?;
    m.params = json!({ "source": source.map(|s| s.tag()) });
    m.counts = counts;
    m.finish(&[out])
}

pub fn cmd_clean(ctx: &Context, input: &Path, out: &Path, source: Option<SubDataset>) -> Result<RunManifest> {
    let dictionary = ctx.config.banned_words()?;
    let cleaner = Cleaner::new(ctx.config.policies.clone(), dictionary)?;
    let docs: Vec<RawDocument> = keep_source(read_jsonl(input)?, source, |d: &RawDocument| d.source);
    if let Some(d) = docs.iter().find(|d| !d.source.is_pretraining()) {
        return Err(CliError::data(format!(
            "{}: source {} has no cleaning policy",
            d.id, d.source
        )));
    }
    let result = cleaner.clean_all(docs)?;
    let drops = side_path(out, "drops.jsonl");
    write_jsonl(out, &result.kept)?;
    write_jsonl(&drops, &result.dropped)?;
    let r = result.report;
    let counts: BTreeMap<String, u64> = [
        ("input_docs", r.input_docs),
        ("kept", r.kept),
        ("dropped_length", r.dropped_length),
        ("dropped_garbled", r.dropped_garbled),
        ("dropped_banned", r.dropped_banned),
        ("chars_removed", r.chars_removed),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    progress("clean", &counts);
    let mut m = ctx.manifest("clean", &[input])?;
    if let Some(p) = &ctx.config.files.banned_words {
        m.resources.insert("banned_words".into(), FileDigest::of(p)?);
    }
    m.params = json!({ "source": source.map(|s| s.tag()), "policies": ctx.config.policies });
    m.counts = counts;
    m.finish(&[out, &drops])
}

pub fn cmd_dedup(ctx: &Context, input: &Path, out: &Path, source: Option<SubDataset>) -> Result<RunManifest> {
    let docs: Vec<CleanDocument> = keep_source(read_jsonl(input)?, source, |d: &CleanDocument| d.source);
    let params = ctx.config.dedup_params(ctx.seed);
    let eligible = |d: &CleanDocument| ctx.config.policies.get(&d.source).is_some_and(|p| p.dedup);
    let candidates: Vec<CleanDocument> = docs.iter().filter(|d| eligible(d)).cloned().collect();
    let n_candidates = candidates.len() as u64;
    let result = dedup_corpus(candidates, &params)?;
    let dropped: BTreeSet<&str> = result
        .clusters
        .iter()
        .flat_map(|c| c.dropped.iter().map(String::as_str))
        .collect();
    let kept: Vec<&CleanDocument> = docs.iter().filter(|d| !dropped.contains(d.id.as_str())).collect();
    let clusters = side_path(out, "clusters.jsonl");
    write_jsonl(out, kept.iter().copied())?;
    write_jsonl(&clusters, &result.clusters)?;
    let counts: BTreeMap<String, u64> = [
        ("input_docs", docs.len() as u64),
        ("candidates", n_candidates),
        ("dropped", result.dropped as u64),
        ("clusters", result.clusters.len() as u64),
        ("kept", kept.len() as u64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    progress("dedup", &counts);
    let mut m = ctx.manifest("dedup", &[input])?;
    m.params = json!({ "source": source.map(|s| s.tag()), "dedup": params });
    m.counts = counts;
    m.finish(&[out, &clusters])
}

pub fn cmd_sft(ctx: &Context, task: SubDataset, input: &Path, out: &Path) -> Result<RunManifest> {
    let mut resources = BTreeMap::new();
    let built: BuildOutput = match task {
        SubDataset::SA => {
            let ratings = ctx.config.ratings()?;
            resources.insert("ratings", ctx.config.files.ratings.clone());
            build_sa(&read_jsonl::<CleanDocument>(input)?, &ratings)
        }
        SubDataset::ED => {
            let taxonomy = ctx.config.taxonomy()?;
            resources.insert("taxonomy", ctx.config.files.taxonomy.clone());
            let opts = EdOptions {
                negatives_per_positive: ctx.config.sft.ed_negatives_per_positive,
                seed: ctx.seed,
            };
            build_ed(&read_jsonl::<LabeledDocument>(input)?, &taxonomy, &opts)
        }
        SubDataset::TD => build_td(&read_jsonl::<CleanDocument>(input)?),
        SubDataset::RS => build_rs(&read_jsonl::<CleanDocument>(input)?),
        SubDataset::QA => build_qa(&read_jsonl::<QaRecord>(input)?),
        SubDataset::SP => build_sp(&read_jsonl::<SpRecord>(input)?, ctx.config.sft.sp_labels),
        other => return Err(CliError::Usage(format!("--task {other} is not a fine-tuning task"))),
    };
    let tok = tokenizer();
    let max = ctx.config.sft.max_input_tokens;
    let mut truncated = 0u64;
    let pairs = built
        .pairs
        .iter()
        .map(|p| {
            let t = truncate_pair(p, &tok, max).map_err(|e| match e {
                fcf_core::batch::TruncateError::TemplateTooLong { .. } => {
                    CliError::Config(fcf_core::ConfigError::invalid("sft.max_input_tokens", e.to_string()))
                }
                other => CliError::data(other.to_string()),
            })?;
            truncated += (t != *p) as u64;
            Ok(t)
        })
        .collect::<Result<Vec<InstructionPair>>>()?;
    let skips = side_path(out, "skips.jsonl");
    write_jsonl(out, &pairs)?;
    write_jsonl(&skips, &built.skipped)?;
    let counts: BTreeMap<String, u64> = [
        ("pairs", pairs.len() as u64),
        ("skipped", built.skipped.len() as u64),
        ("truncated", truncated),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    progress("sft", &counts);
    let mut m = ctx.manifest("sft", &[input])?;
    for (name, path) in resources {
        if let Some(p) = path {
            m.resources.insert(name.into(), FileDigest::of(&p)?);
        }
    }
    m.params = json!({ "task": task.tag(), "sft": ctx.config.sft, "tokenizer": tok.name() });
    m.counts = counts;
    m.finish(&[out, &skips])
}

pub fn cmd_pack(ctx: &Context, input: &Path, out: &Path, source: Option<SubDataset>) -> Result<RunManifest> {
    let mut docs: Vec<CleanDocument> = keep_source(read_jsonl(input)?, source, |d: &CleanDocument| d.source);
    let shuffle = ctx.config.pack.shuffle.then_some(ctx.seed);
    order_documents(&mut docs, shuffle);
    let tok = tokenizer();
    let stream = build_token_stream(&docs, &tok);
    for e in &stream.skipped {
        log::warn!("{}", json!({"stage": "pack", "skipped": e.record, "reason": e.reason}));
    }
    let (len, gap) = (ctx.config.pack.window_len, ctx.config.pack.window_gap);
    let count = window_count(stream.tokens.len(), len, gap);
    let header = WindowFileHeader {
        window_len: len as u32,
        window_gap: gap as u32,
        eos_id: tok.eos_id(),
        count: count as u64,
        tokenizer: tok.name().to_string(),
    };
    let file = File::create(out).map_err(|e| CliError::io(out, e))?;
    let mut w = BufWriter::new(file);
    write_window_file(&mut w, &header, windows(&stream.tokens, len, gap)?.map(|(_, w)| w))
        .map_err(|e| CliError::io(out, e))?;
    std::io::Write::flush(&mut w).map_err(|e| CliError::io(out, e))?;
    let covered = if count == 0 { 0 } else { (count - 1) * gap + len };
    let counts: BTreeMap<String, u64> = [
        ("documents", stream.documents as u64),
        ("skipped_documents", stream.skipped.len() as u64),
        ("tokens", stream.tokens.len() as u64),
        ("windows", count as u64),
        ("dropped_tail_tokens", (stream.tokens.len() - covered) as u64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    progress("pack", &counts);
    let mut m = ctx.manifest("pack", &[input])?;
    m.params = json!({
        "source": source.map(|s| s.tag()),
        "window_len": len,
        "window_gap": gap,
        "order": if shuffle.is_some() { "id+shuffle" } else { "id" },
        "tokenizer": tok.name(),
        "eos_id": tok.eos_id(),
    });
    m.counts = counts;
    m.finish(&[out])
}

/// Either a clean document or an instruction pair, decided by the `task` key.
fn read_stats_input(path: &Path) -> Result<(Vec<CleanDocument>, Vec<InstructionPair>)> {
    let values: Vec<serde_json::Value> = read_jsonl(path)?;
    let mut docs = Vec::new();
    let mut pairs = Vec::new();
    for (n, v) in values.into_iter().enumerate() {
        let bad = |e: serde_json::Error| CliError::data(format!("{}:{}: {e}", path.display(), n + 1));
        if v.get("task").is_some() {
            pairs.push(serde_json::from_value(v).map_err(bad)?);
        } else {
            docs.push(serde_json::from_value(v).map_err(bad)?);
        }
    }
    Ok((docs, pairs))
}

pub fn compute_table(inputs: &[PathBuf]) -> Result<StatsTable> {
    let tok = tokenizer();
    let mut docs = Vec::new();
    let mut pairs = Vec::new();
    for p in inputs {
        let (d, q) = read_stats_input(p)?;
        docs.extend(d);
        pairs.extend(q);
    }
    let err = |e: fcf_core::tokenizer::TokenizeError| CliError::data(e.to_string());
    let mut table = compute_stats(&docs, &tok).map_err(err)?;
    table
        .sections
        .extend(compute_pair_stats(&pairs, &tok).map_err(err)?.sections);
    Ok(table)
}

pub fn cmd_stats(ctx: &Context, inputs: &[PathBuf], out: Option<&Path>) -> Result<(String, Option<RunManifest>)> {
    let table = compute_table(inputs)?;
    let text = format_table(&table);
    let Some(out) = out else {
        return Ok((text, None));
    };
    std::fs::write(out, format_rows(&table)).map_err(|e| CliError::io(out, e))?;
    let paths: Vec<&Path> = inputs.iter().map(PathBuf::as_path).collect();
    let mut m = ctx.manifest("stats", &paths)?;
    m.params = json!({ "tokenizer": tokenizer().name() });
    m.counts = table
        .rows()
        .map(|r| (format!("docs.{}", r.key), r.counts.docs))
        .collect();
    Ok((text, Some(m.finish(&[out])?)))
}

pub fn cmd_plan_batches(ctx: &Context, input: &Path, out: &Path) -> Result<RunManifest> {
    let pairs: Vec<InstructionPair> = read_jsonl(input)?;
    let tok = tokenizer();
    let plan: Vec<Batch> =
        plan_batches(&pairs, &tok, ctx.config.sft.token_budget).map_err(|e| CliError::data(e.to_string()))?;
    write_jsonl(out, &plan)?;
    let counts: BTreeMap<String, u64> = [
        ("pairs", pairs.len() as u64),
        ("batches", plan.len() as u64),
        ("remainder_batches", plan.iter().filter(|b| b.remainder).count() as u64),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect();
    progress("plan-batches", &counts);
    let mut m = ctx.manifest("plan-batches", &[input])?;
    m.params = json!({ "token_budget": ctx.config.sft.token_budget, "tokenizer": tok.name() });
    m.counts = counts;
    m.finish(&[out])
}

/// Checks an artifact against its sidecar manifest.
pub fn cmd_verify(input: &Path) -> Result<RunManifest> {
    let m =
        RunManifest::read(input)?.ok_or_else(|| CliError::data(format!("{}: no manifest sidecar", input.display())))?;
    verify_input(input)?;
    Ok(m)
}
