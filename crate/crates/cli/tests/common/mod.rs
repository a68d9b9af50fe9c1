#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const TASKS: [(&str, &str); 6] = [
    ("SA", "clean.jsonl"),
    ("TD", "clean.jsonl"),
    ("RS", "clean.jsonl"),
    ("ED", "tasks/ed.jsonl"),
    ("QA", "tasks/qa.jsonl"),
    ("SP", "tasks/sp.jsonl"),
];

pub fn fcf(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fcf"))
        .current_dir(dir)
        .env("FCF_LOG", "warn")
        .args(args)
        .output()
        .expect("spawn fcf")
}

pub fn ok(dir: &Path, args: &[&str]) -> Output {
    let out = fcf(dir, args);
    assert!(
        out.status.success(),
        "fcf {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Generates the synthetic corpus in `dir` and runs every stage on it.
/// Returns the artifacts in stage order.
pub fn run_pipeline(dir: &Path, seed: u64) -> Vec<PathBuf> {
    let seed = seed.to_string();
    ok(dir, &["synth", "--out", ".", "--seed", &seed]);
    let c = ["--config", "config.toml", "--seed", &seed];
    let with = |rest: &[&str]| -> Vec<String> { c.iter().chain(rest).map(|s| s.to_string()).collect() };
    let run = |rest: &[&str]| {
        let args = with(rest);
        ok(dir, &args.iter().map(String::as_str).collect::<Vec<_>>());
    };
    run(&["ingest", "--in", "manifest.toml", "--out", "raw.jsonl"]);
    run(&["clean", "--in", "raw.jsonl", "--out", "clean.jsonl"]);
    run(&["dedup", "--in", "clean.jsonl", "--out", "dedup.jsonl"]);
    run(&["pack", "--in", "dedup.jsonl", "--out", "windows.bin"]);
    let mut artifacts: Vec<&str> = vec![
        "raw.jsonl",
        "clean.jsonl",
        "clean.jsonl.drops.jsonl",
        "dedup.jsonl",
        "dedup.jsonl.clusters.jsonl",
        "windows.bin",
    ];
    let names: Vec<(String, String)> = TASKS
        .iter()
        .map(|(t, input)| {
            let out = format!("{}.jsonl", t.to_lowercase());
            run(&["sft", "--task", t, "--in", input, "--out", &out]);
            (out.clone(), format!("{out}.skips.jsonl"))
        })
        .collect();
    let mut stats_args = vec!["stats", "--in", "dedup.jsonl"];
    for (out, _) in &names {
        stats_args.extend(["--in", out.as_str()]);
    }
    stats_args.extend(["--out", "stats.jsonl"]);
    run(&stats_args);
    run(&["plan-batches", "--in", "sa.jsonl", "--out", "batches.jsonl"]);
    for (a, b) in &names {
        artifacts.push(a);
        artifacts.push(b);
    }
    artifacts.extend(["stats.jsonl", "batches.jsonl"]);
    artifacts.iter().map(|a| dir.join(a)).collect()
}
