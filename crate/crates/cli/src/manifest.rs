//! Reproducibility sidecars written next to every stage output.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn file_sha256(path: &Path) -> Result<String> {
    let bytes = std::fs::read(path).map_err(|e| CliError::io(path, e))?;
    Ok(sha256_hex(&bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    /// File name only, so manifests do not depend on the working directory.
    pub name: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of(path: &Path) -> Result<FileDigest> {
        Ok(FileDigest {
            name: file_name(path),
            sha256: file_sha256(path)?,
        })
    }
}

fn file_name(path: &Path) -> String {
    path.file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub run_id: String,
    pub stage: String,
    pub tool_version: String,
    pub seed: u64,
    pub config_digest: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    /// Dictionary, rating map and taxonomy files the run read.
    pub resources: BTreeMap<String, FileDigest>,
    pub params: serde_json::Value,
    pub counts: BTreeMap<String, u64>,
}

pub fn sidecar_path(artifact: &Path) -> PathBuf {
    let mut name = artifact.as_os_str().to_owned();
    name.push(".manifest.json");
    PathBuf::from(name)
}

impl RunManifest {
    pub fn new(stage: &str, seed: u64, config_digest: String) -> RunManifest {
        RunManifest {
            run_id: String::new(),
            stage: stage.to_string(),
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
            seed,
            config_digest,
            inputs: Vec::new(),
            outputs: Vec::new(),
            resources: BTreeMap::new(),
            params: serde_json::Value::Null,
            counts: BTreeMap::new(),
        }
    }

    /// Deterministic id over everything that defines the run.
    fn compute_run_id(&self) -> String {
        let key = serde_json::json!({
            "stage": self.stage,
            "seed": self.seed,
            "config": self.config_digest,
            "inputs": self.inputs,
            "resources": self.resources,
            "params": self.params,
        });
        sha256_hex(key.to_string().as_bytes())[..16].to_string()
    }

    /// Digests `outputs`, fills in the run id and writes the sidecar of the
    /// first output.
    pub fn finish(mut self, outputs: &[&Path]) -> Result<RunManifest> {
        self.outputs = outputs.iter().map(|p| FileDigest::of(p)).collect::<Result<_>>()?;
        self.run_id = self.compute_run_id();
        let path = sidecar_path(outputs[0]);
        let text = serde_json::to_string_pretty(&self).expect("manifest serializes") + "\n";
        std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
        Ok(self)
    }

    pub fn read(artifact: &Path) -> Result<Option<RunManifest>> {
        let path = sidecar_path(artifact);
        let text = match std::fs::read_to_string(&path) {
            Ok(t) => t,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(CliError::io(&path, e)),
        };
        serde_json::from_str(&text)
            .map(Some)
            .map_err(|e| CliError::data(format!("{}: malformed manifest: {e}", path.display())))
    }

    /// Re-digests every output that sits next to `artifact` and checks the
    /// run id.
    pub fn verify(&self, artifact: &Path) -> Result<()> {
        if self.compute_run_id() != self.run_id {
            return Err(CliError::data(format!(
                "{}: run id does not match manifest contents",
                artifact.display()
            )));
        }
        let dir = artifact.parent().unwrap_or(Path::new("."));
        for out in &self.outputs {
            let path = dir.join(&out.name);
            let got = file_sha256(&path)?;
            if got != out.sha256 {
                return Err(CliError::data(format!(
                    "{}: digest {got} does not match manifest {}",
                    path.display(),
                    out.sha256
                )));
            }
        }
        Ok(())
    }
}

/// Verifies an input against its sidecar when one exists.
pub fn verify_input(path: &Path) -> Result<()> {
    match RunManifest::read(path)? {
        Some(m) => m.verify(path),
        None => Ok(()),
    }
}
