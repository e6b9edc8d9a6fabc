//! Run directories and manifests.
//!
//! Every invocation writes into `<out>/<UTC timestamp>-<config hash>/`:
//! the resolved scenario (`scenario.json`, after `--set`), the CSV tables
//! and `manifest.json`. The config hash covers the subcommand, its options
//! and the resolved scenario, so rerunning with
//! `--scenario <run>/scenario.json` and the options listed in the manifest
//! reproduces the tables byte for byte.

use std::path::{Path, PathBuf};

use cachepart::report::Table;
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// What a command produced, before anything touches the disk.
pub struct Artifacts {
    pub tables: Vec<Table>,
    /// Input documents copied verbatim into the run directory.
    pub inputs: Vec<(String, String)>,
    pub summary: Value,
    pub seed: Option<u64>,
}

impl Artifacts {
    pub fn new(tables: Vec<Table>, summary: Value) -> Self {
        Self {
            tables,
            inputs: Vec::new(),
            summary,
            seed: None,
        }
    }

    pub fn with_input(mut self, name: &str, text: String) -> Self {
        self.inputs.push((name.to_string(), text));
        self
    }
}

/// Hash of everything that determines a run's outputs.
pub fn config_hash<O: Serialize>(command: &str, options: &O, inputs: &[(String, String)]) -> String {
    let doc = json!({
        "command": command,
        "options": options,
        "inputs": inputs.iter().map(|(name, text)| json!({"name": name, "sha256": sha256_hex(text.as_bytes())})).collect::<Vec<_>>(),
        "version": env!("CARGO_PKG_VERSION"),
    });
    sha256_hex(doc.to_string().as_bytes())
}

fn fresh_dir(out: &Path, stem: &str) -> std::io::Result<PathBuf> {
    std::fs::create_dir_all(out)?;
    let mut dir = out.join(stem);
    let mut n = 1;
    while dir.exists() {
        n += 1;
        dir = out.join(format!("{stem}-{n}"));
    }
    std::fs::create_dir(&dir)?;
    Ok(dir)
}

pub fn write_run<O: Serialize>(
    out: &Path,
    command: &str,
    options: &O,
    artifacts: &Artifacts,
    parallel: bool,
) -> cachepart::Result<PathBuf> {
    let hash = config_hash(command, options, &artifacts.inputs);
    let now = chrono::Utc::now();
    let dir = fresh_dir(out, &format!("{}-{}", now.format("%Y%m%dT%H%M%SZ"), &hash[..12]))?;
    let mut files = Vec::new();
    for (name, text) in &artifacts.inputs {
        std::fs::write(dir.join(name), text)?;
        files.push(name.clone());
    }
    for table in &artifacts.tables {
        table.write_in(&dir)?;
        files.push(format!("{}.csv", table.name));
    }
    let manifest = json!({
        "tool": "cachepart",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "options": options,
        "config_hash": hash,
        "inputs": artifacts.inputs.iter().map(|(name, text)| json!({"file": name, "sha256": sha256_hex(text.as_bytes())})).collect::<Vec<_>>(),
        "seed": artifacts.seed,
        "execution": if parallel { "parallel" } else { "sequential" },
        "workers": std::env::var(cachepart::par::WORKERS_ENV).ok(),
        "created": now.to_rfc3339_opts(chrono::SecondsFormat::Secs, true),
        "outputs": files,
        "summary": artifacts.summary,
    });
    std::fs::write(dir.join("manifest.json"), serde_json::to_string_pretty(&manifest)? + "\n")?;
    Ok(dir)
}
