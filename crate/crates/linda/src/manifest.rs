//! Run manifests: everything needed to reproduce an output file.

use std::fs::File;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub core_version: String,
    pub command: Vec<String>,
    pub config: Value,
    pub config_sha256: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub started_unix: f64,
    pub wall_seconds: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let mut hasher = Sha256::new();
    let mut f = File::open(path).map_err(|e| Error::io(path, e))?;
    io::copy(&mut f, &mut hasher).map_err(|e| Error::io(path, e))?;
    let sha256 = hasher.finalize().iter().map(|b| format!("{b:02x}")).collect();
    Ok(FileDigest { path: path.display().to_string(), sha256 })
}

/// Collects manifest fields over the course of one command.
pub struct Recorder {
    start: Instant,
    started_unix: f64,
    command: Vec<String>,
}

impl Recorder {
    pub fn start(command: Vec<String>) -> Self {
        let started_unix = SystemTime::now().duration_since(UNIX_EPOCH).map_or(0.0, |d| d.as_secs_f64());
        Self { start: Instant::now(), started_unix, command }
    }

    pub fn finish(
        self,
        config: Value,
        inputs: &[PathBuf],
        outputs: &[PathBuf],
        seeds: Vec<u64>,
    ) -> Result<Manifest> {
        let canonical = serde_json::to_vec(&config).expect("JSON values always serialize");
        Ok(Manifest {
            tool: "linda".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            core_version: linda_core::VERSION.into(),
            command: self.command,
            config_sha256: sha256_hex(&canonical),
            config,
            inputs: inputs.iter().map(|p| file_digest(p)).collect::<Result<_>>()?,
            outputs: outputs.iter().map(|p| file_digest(p)).collect::<Result<_>>()?,
            seeds,
            threads: rayon::current_num_threads(),
            started_unix: self.started_unix,
            wall_seconds: self.start.elapsed().as_secs_f64(),
        })
    }
}

/// `results.tsv` -> `results.tsv.manifest.json`.
pub fn manifest_path(output: &Path) -> PathBuf {
    let mut s = output.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn write_manifest(path: &Path, manifest: &Manifest) -> Result<()> {
    let mut f = File::create(path).map_err(|e| Error::io(path, e))?;
    serde_json::to_writer_pretty(&mut f, manifest).map_err(|e| Error::io(path, e.into()))?;
    writeln!(f).map_err(|e| Error::io(path, e))
}
