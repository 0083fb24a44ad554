//! Artifact writers: CSV with stable formatting, JSON reports, and the run
//! manifest.
//!
//! CSVs use '.' decimal separators, LF line endings, and a header row; floats
//! are written in shortest round-trip form so identical runs produce byte
//! identical files.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

/// Accumulates artifact paths and check outcomes for the manifest.
pub struct RunRecorder {
    pub out_dir: PathBuf,
    artifacts: Vec<String>,
    checks: Vec<CheckOutcome>,
    started: Option<String>,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckOutcome {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub spec_version: u32,
    pub command: String,
    pub config_sha256: String,
    pub code_version: String,
    /// Wall-clock bounds; omitted by the deterministic verification entry
    /// point so repeated runs are byte identical.
    pub started_utc: Option<String>,
    pub finished_utc: Option<String>,
    pub artifacts: Vec<String>,
    pub checks: Vec<CheckOutcome>,
}

impl RunRecorder {
    /// `timestamps = false` keeps the manifest byte-reproducible.
    pub fn new(out_dir: &Path, timestamps: bool) -> Result<Self> {
        fs::create_dir_all(out_dir)
            .with_context(|| format!("cannot create output dir {}", out_dir.display()))?;
        Ok(Self {
            out_dir: out_dir.to_path_buf(),
            artifacts: Vec::new(),
            checks: Vec::new(),
            started: timestamps.then(now_utc),
        })
    }

    pub fn check(&mut self, name: &str, pass: bool, detail: String) {
        self.checks.push(CheckOutcome {
            name: name.to_string(),
            pass,
            detail,
        });
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn checks(&self) -> &[CheckOutcome] {
        &self.checks
    }

    pub fn write_csv(&mut self, name: &str, header: &str, rows: &[Vec<f64>]) -> Result<()> {
        let mut text = String::with_capacity(rows.len() * 32 + header.len() + 1);
        text.push_str(header);
        text.push('\n');
        for row in rows {
            for (i, x) in row.iter().enumerate() {
                if i > 0 {
                    text.push(',');
                }
                write!(text, "{x:?}").expect("write to string");
            }
            text.push('\n');
        }
        self.write_bytes(name, text.as_bytes())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).context("serialize report")?;
        bytes.push(b'\n');
        self.write_bytes(name, &bytes)
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let path = self.out_dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent)?;
        }
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        self.artifacts.push(name.to_string());
        Ok(())
    }

    /// Write the manifest last so every listed artifact already exists.
    pub fn finish<T: Serialize>(self, command: &str, config: &T) -> Result<RunManifest> {
        let config_bytes = serde_json::to_vec(config)?;
        let mut hasher = Sha256::new();
        hasher.update(&config_bytes);
        let config_sha256 = format!("{:x}", hasher.finalize());
        let finished = self.started.is_some().then(now_utc);
        let manifest = RunManifest {
            spec_version: crate::config::SPEC_VERSION,
            command: command.to_string(),
            config_sha256,
            code_version: env!("CARGO_PKG_VERSION").to_string(),
            started_utc: self.started.clone(),
            finished_utc: finished,
            artifacts: self.artifacts.clone(),
            checks: self.checks.clone(),
        };
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        let path = self.out_dir.join("manifest.json");
        fs::write(&path, bytes).with_context(|| format!("cannot write {}", path.display()))?;
        Ok(manifest)
    }
}

fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}
