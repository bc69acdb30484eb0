use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to regenerate a command's outputs.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub command: String,
    pub tool_version: &'static str,
    pub config_hash: String,
    pub config: String,
    pub seed: Option<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

pub fn digest_file(path: &Path) -> Result<String> {
    let bytes = fs::read(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// Tracks the files a command reads and writes and refuses to write over an
/// input.
pub struct Run {
    pub command: &'static str,
    pub output_dir: PathBuf,
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
    pub counts: BTreeMap<String, usize>,
    pub warnings: Vec<String>,
}

impl Run {
    pub fn new(command: &'static str, output_dir: PathBuf) -> Result<Self> {
        fs::create_dir_all(&output_dir).with_context(|| format!("creating {}", output_dir.display()))?;
        Ok(Self {
            command,
            output_dir,
            inputs: Vec::new(),
            outputs: Vec::new(),
            counts: BTreeMap::new(),
            warnings: Vec::new(),
        })
    }

    pub fn input(&mut self, path: &Path) -> PathBuf {
        self.inputs.push(path.to_path_buf());
        path.to_path_buf()
    }

    /// Path for a new output file; fails if it would overwrite an input.
    pub fn output(&mut self, name: &str) -> Result<PathBuf> {
        let path = self.output_dir.join(name);
        let target = fs::canonicalize(&path).ok();
        for input in &self.inputs {
            if target.is_some() && fs::canonicalize(input).ok() == target {
                bail!("output {} would overwrite input {}", path.display(), input.display());
            }
        }
        self.outputs.push(path.clone());
        Ok(path)
    }

    pub fn warn_all(&mut self, warnings: Vec<String>) {
        self.warnings.extend(warnings);
    }

    pub fn count(&mut self, key: impl Into<String>, n: usize) {
        self.counts.insert(key.into(), n);
    }

    pub fn finish(self, config_text: String, config_hash: String, seed: Option<u64>) -> Result<PathBuf> {
        let digests = |paths: &[PathBuf]| -> Result<Vec<FileDigest>> {
            paths
                .iter()
                .map(|p| {
                    Ok(FileDigest {
                        path: p.display().to_string(),
                        sha256: digest_file(p)?,
                    })
                })
                .collect()
        };
        let manifest = Manifest {
            command: self.command.to_string(),
            tool_version: env!("CARGO_PKG_VERSION"),
            config_hash,
            config: config_text,
            seed,
            inputs: digests(&self.inputs)?,
            outputs: digests(&self.outputs)?,
            counts: self.counts,
            warnings: self.warnings,
        };
        let path = self.output_dir.join(format!("{}.manifest.json", self.command));
        let mut text = serde_json::to_string_pretty(&manifest)?;
        text.push('\n');
        fs::write(&path, text).with_context(|| format!("writing {}", path.display()))?;
        Ok(path)
    }
}
