//! Run directories: `<runs>/<timestamp>-<name>/{manifest.json, results.csv, artifacts/}`.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub argv: Vec<String>,
    pub config: serde_json::Value,
    pub seeds: Vec<u64>,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
    pub tool_version: String,
    pub started: String,
    pub wall_time_secs: f64,
    pub status: String,
}

pub struct Run {
    pub dir: PathBuf,
    manifest: RunManifest,
    clock: Instant,
}

/// SHA-256 of a file, or of every file below a directory in path order.
pub fn digest(path: &Path) -> std::io::Result<String> {
    let mut h = Sha256::new();
    let mut files = Vec::new();
    collect(path, &mut files)?;
    files.sort();
    for f in &files {
        if path.is_dir() {
            h.update(f.strip_prefix(path).unwrap_or(f).to_string_lossy().as_bytes());
            h.update([0]);
        }
        let mut buf = Vec::new();
        fs::File::open(f)?.read_to_end(&mut buf)?;
        h.update(&buf);
    }
    Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
}

fn collect(path: &Path, out: &mut Vec<PathBuf>) -> std::io::Result<()> {
    if path.is_dir() {
        for e in fs::read_dir(path)? {
            collect(&e?.path(), out)?;
        }
    } else {
        out.push(path.to_owned());
    }
    Ok(())
}

impl Run {
    pub fn create(runs_dir: &Path, name: &str, command: &str, config: serde_json::Value, seeds: Vec<u64>) -> Result<Run, CliError> {
        let now = chrono::Utc::now();
        let stamp = now.format("%Y%m%dT%H%M%SZ").to_string();
        let mut dir = runs_dir.join(format!("{stamp}-{name}"));
        let mut i = 1;
        while dir.exists() {
            dir = runs_dir.join(format!("{stamp}-{name}-{i}"));
            i += 1;
        }
        fs::create_dir_all(dir.join("artifacts")).map_err(|e| CliError::write(&dir, e))?;
        Ok(Run {
            dir,
            manifest: RunManifest {
                command: command.to_owned(),
                argv: std::env::args().collect(),
                config,
                seeds,
                inputs: Vec::new(),
                outputs: Vec::new(),
                tool_version: env!("CARGO_PKG_VERSION").to_owned(),
                started: now.to_rfc3339(),
                wall_time_secs: 0.0,
                status: "running".into(),
            },
            clock: Instant::now(),
        })
    }

    pub fn artifact(&self, name: &str) -> PathBuf {
        self.dir.join("artifacts").join(name)
    }

    pub fn input(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = digest(path).map_err(|e| CliError::Data(format!("cannot read {}: {e}", path.display())))?;
        self.manifest.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256,
        });
        Ok(())
    }

    pub fn output(&mut self, path: &Path) -> Result<(), CliError> {
        let sha256 = digest(path).map_err(|e| CliError::write(path, e))?;
        let shown = path.strip_prefix(&self.dir).unwrap_or(path);
        self.manifest.outputs.push(FileDigest {
            path: shown.display().to_string(),
            sha256,
        });
        Ok(())
    }

    /// Write the manifest with the final status. Called on success and on
    /// failure.
    pub fn finish(mut self, status: &Result<(), CliError>) -> Result<PathBuf, CliError> {
        self.manifest.wall_time_secs = self.clock.elapsed().as_secs_f64();
        self.manifest.status = match status {
            Ok(()) => "ok".into(),
            Err(e) => format!("failed: {e}"),
        };
        let path = self.dir.join("manifest.json");
        let text = serde_json::to_string_pretty(&self.manifest)?;
        fs::write(&path, text + "\n").map_err(|e| CliError::write(&path, e))?;
        Ok(self.dir)
    }
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent).map_err(|e| CliError::write(parent, e))?;
    }
    fs::write(path, text).map_err(|e| CliError::write(path, e))
}
