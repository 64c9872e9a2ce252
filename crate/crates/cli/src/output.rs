//! Output directory bookkeeping and the run manifest.

use std::path::{Path, PathBuf};

use anyhow::Context;
use serde::Serialize;
use sha2::{Digest, Sha256};

pub const MANIFEST: &str = "manifest.json";

#[derive(Debug, Clone, Serialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
    /// Header of CSV files.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub columns: Option<Vec<String>>,
}

/// Writes files into one directory and remembers their hashes.
pub struct OutputDir {
    root: PathBuf,
    files: Vec<FileEntry>,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl OutputDir {
    pub fn create(root: &Path) -> anyhow::Result<Self> {
        std::fs::create_dir_all(root)
            .with_context(|| format!("creating output directory {}", root.display()))?;
        Ok(OutputDir {
            root: root.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn files(&self) -> &[FileEntry] {
        &self.files
    }

    pub fn write_bytes(
        &mut self,
        name: &str,
        bytes: &[u8],
        columns: Option<Vec<String>>,
    ) -> anyhow::Result<()> {
        let path = self.root.join(name);
        std::fs::write(&path, bytes).with_context(|| format!("writing {}", path.display()))?;
        self.files.retain(|f| f.path != name);
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len(),
            columns,
        });
        log::info!("wrote {}", path.display());
        Ok(())
    }

    pub fn write_with(
        &mut self,
        name: &str,
        f: impl FnOnce(&mut Vec<u8>) -> dpfilter_core::Result<()>,
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        f(&mut buf)?;
        self.write_bytes(name, &buf, None)
    }

    /// CSV with a leading `t` column.
    pub fn write_csv(
        &mut self,
        name: &str,
        names: &[String],
        times: &[f64],
        rows: &[Vec<f64>],
    ) -> anyhow::Result<()> {
        let mut buf = Vec::new();
        dpfilter_core::dynamics::write_csv(&mut buf, names, times, rows)?;
        let columns = std::iter::once("t".to_string())
            .chain(names.iter().cloned())
            .collect();
        self.write_bytes(name, &buf, Some(columns))
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        let mut buf = serde_json::to_vec_pretty(value)?;
        buf.push(b'\n');
        self.write_bytes(name, &buf, None)
    }

    pub fn write_text(&mut self, name: &str, text: &str) -> anyhow::Result<()> {
        self.write_bytes(name, text.as_bytes(), None)
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedInfo {
    pub effective: u64,
    /// `config` or `env:DPFILTER_SEED`.
    pub source: String,
    pub config_value: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConfigInfo {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub core_version: &'static str,
    pub subcommand: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<ConfigInfo>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<SeedInfo>,
    pub threads: usize,
    pub strict: bool,
    pub passed: bool,
    pub files: Vec<FileEntry>,
}

impl Manifest {
    pub fn write(&self, dir: &Path) -> anyhow::Result<()> {
        let mut buf = serde_json::to_vec_pretty(self)?;
        buf.push(b'\n');
        let path = dir.join(MANIFEST);
        std::fs::write(&path, buf).with_context(|| format!("writing {}", path.display()))?;
        Ok(())
    }
}
