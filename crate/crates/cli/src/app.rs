use std::path::PathBuf;

use clap::{Parser, Subcommand};
use fcf_core::SubDataset;

use crate::commands::{
    cmd_clean, cmd_dedup, cmd_ingest, cmd_pack, cmd_plan_batches, cmd_sft, cmd_stats, cmd_verify, Context,
};
use crate::config::RunConfig;
use crate::error::{CliError, Result};
use crate::manifest::RunManifest;

#[derive(Debug, Parser)]
#[command(name = "fcf", version, about = "Financial corpus pipeline")]
pub struct Cli {
    /// Run configuration (TOML); built-in defaults when omitted
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Seed for every randomized step
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; all cores when omitted
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Read the files listed in an ingest manifest into raw JSONL
    Ingest(StageArgs),
    /// Apply per-source cleaning policies
    Clean(StageArgs),
    /// Remove near-duplicates
    Dedup(StageArgs),
    /// Build fine-tuning pairs for one task
    Sft {
        #[arg(long)]
        task: SubDataset,
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Tokenize and cut sliding windows
    Pack(StageArgs),
    /// Corpus statistics table
    Stats {
        #[arg(long = "in", required = true)]
        inputs: Vec<PathBuf>,
        /// Also write the rows as JSONL
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Group instruction pairs into length-sorted batches
    PlanBatches {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Check an artifact against its manifest
    Verify {
        #[arg(long = "in")]
        input: PathBuf,
    },
    /// Write a synthetic corpus with known outcomes
    Synth {
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, clap::Args)]
pub struct StageArgs {
    #[arg(long = "in")]
    pub input: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Only process this source
    #[arg(long)]
    pub source: Option<SubDataset>,
}

fn report(m: &RunManifest) {
    log::info!("{}", serde_json::json!({"stage": m.stage, "run_id": m.run_id}));
}

/// Executes one parsed invocation. Anything printed for the user goes to
/// stdout; logs go to stderr.
pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    if let Command::Verify { input } = &cli.command {
        let m = cmd_verify(input)?;
        println!("ok {} {}", m.stage, m.run_id);
        return Ok(());
    }
    if let Command::Synth { out } = &cli.command {
        let truth = crate::synth::generate(out, cli.seed)?;
        let docs: u64 = truth.sources.values().map(|s| s.input).sum();
        println!("wrote {docs} documents to {}", out.display());
        return Ok(());
    }
    let ctx = Context::new(RunConfig::load(cli.config.as_deref())?, cli.seed);
    let m = match &cli.command {
        Command::Ingest(a) => cmd_ingest(&ctx, &a.input, &a.out, a.source)?,
        Command::Clean(a) => cmd_clean(&ctx, &a.input, &a.out, a.source)?,
        Command::Dedup(a) => cmd_dedup(&ctx, &a.input, &a.out, a.source)?,
        Command::Pack(a) => cmd_pack(&ctx, &a.input, &a.out, a.source)?,
        Command::Sft { task, input, out } => cmd_sft(&ctx, *task, input, out)?,
        Command::PlanBatches { input, out } => cmd_plan_batches(&ctx, input, out)?,
        Command::Stats { inputs, out } => {
            let (text, m) = cmd_stats(&ctx, inputs, out.as_deref())?;
            print!("{text}");
            match m {
                Some(m) => m,
                None => return Ok(()),
            }
        }
        Command::Verify { .. } | Command::Synth { .. } => unreachable!(),
    };
    report(&m);
    Ok(())
}
