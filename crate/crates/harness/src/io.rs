//! CSV files with a `# manifest: <hash>` first line, and run manifests.

use std::collections::BTreeMap;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::Serialize;

use crate::config::{sha256_hex, ExperimentConfig};
use crate::error::{HarnessError, Result};

pub const MANIFEST_PREFIX: &str = "# manifest: ";

pub fn io_err(path: &Path, e: impl std::fmt::Display) -> HarnessError {
    HarnessError::Io(format!("{}: {e}", path.display()))
}

pub fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| io_err(path, e))
}

/// Writes `rows` under `header`, preceded by the manifest comment line.
pub fn write_csv(path: &Path, manifest: &str, header: &[String], rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    writeln!(buf, "{MANIFEST_PREFIX}{manifest}")?;
    {
        let mut w = csv::Writer::from_writer(&mut buf);
        w.write_record(header)?;
        for r in rows {
            w.write_record(r)?;
        }
        w.flush()?;
    }
    fs::write(path, buf).map_err(|e| io_err(path, e))
}

pub struct CsvTable {
    pub manifest: String,
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

pub fn read_csv(path: &Path) -> Result<CsvTable> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let first = text.lines().next().unwrap_or("");
    let manifest = first
        .strip_prefix(MANIFEST_PREFIX)
        .ok_or_else(|| HarnessError::Run(format!("{}: missing manifest line", path.display())))?
        .trim()
        .to_string();
    let mut r = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let header = r.headers()?.iter().map(str::to_string).collect();
    let rows = r
        .records()
        .map(|rec| rec.map(|r| r.iter().map(str::to_string).collect()))
        .collect::<std::result::Result<_, _>>()?;
    Ok(CsvTable {
        manifest,
        header,
        rows,
    })
}

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| io_err(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| HarnessError::Run(format!("{}: {e}", path.display())))
}

/// Shortest round-trip decimal form.
pub fn fmt_f64(x: f64) -> String {
    format!("{x}")
}

pub fn parse_f64(s: &str) -> Result<f64> {
    s.parse()
        .map_err(|_| HarnessError::Run(format!("not a number: {s:?}")))
}

#[derive(Debug, Serialize)]
pub struct Manifest<'a> {
    pub command: &'a str,
    pub config_hash: String,
    pub master_seed: u64,
    pub config: &'a ExperimentConfig,
    /// Relative path → SHA-256 of the file contents.
    pub files: BTreeMap<String, String>,
}

/// Hashes `files` (relative to `root`) and writes `<root>/manifest.json`.
pub fn write_manifest(root: &Path, command: &str, cfg: &ExperimentConfig, files: &[PathBuf]) -> Result<()> {
    let mut map = BTreeMap::new();
    for f in files {
        let bytes = fs::read(root.join(f)).map_err(|e| io_err(f, e))?;
        map.insert(f.to_string_lossy().replace('\\', "/"), sha256_hex(&bytes));
    }
    let m = Manifest {
        command,
        config_hash: cfg.hash(),
        master_seed: cfg.master_seed,
        config: cfg,
        files: map,
    };
    write_json(&root.join("manifest.json"), &m)
}
