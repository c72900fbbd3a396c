//! Content-addressed results cache. The key hashes everything that affects
//! the numbers (command, model, command block, crate version); worker count
//! and output location are excluded.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::CliError;
use crate::export::{sha256_hex, Artifacts};

const ENTRY_FILE: &str = "entry.json";

pub fn default_root() -> PathBuf {
    if let Some(d) = std::env::var_os("QKAM_CACHE_DIR") {
        return PathBuf::from(d);
    }
    if let Some(d) = std::env::var_os("XDG_CACHE_HOME") {
        return PathBuf::from(d).join("qkam");
    }
    match std::env::var_os("HOME") {
        Some(h) => PathBuf::from(h).join(".cache").join("qkam"),
        None => std::env::temp_dir().join("qkam-cache"),
    }
}

pub fn key(command: &str, inputs: &serde_json::Value) -> String {
    let doc = serde_json::json!({
        "command": command,
        "version": env!("CARGO_PKG_VERSION"),
        "inputs": inputs,
    });
    sha256_hex(doc.to_string().as_bytes())
}

#[derive(Debug, Clone, Serialize, Deserialize)]
struct Entry {
    files: Vec<String>,
    n_floquet_solves: usize,
    details: serde_json::Value,
}

/// A finished command: its files plus what the manifest needs.
#[derive(Debug, Clone, Default)]
pub struct Outcome {
    pub artifacts: Artifacts,
    pub n_floquet_solves: usize,
    pub details: serde_json::Value,
}

pub fn load(root: &Path, key: &str) -> Option<Outcome> {
    let dir = root.join(key);
    let entry: Entry = serde_json::from_slice(&std::fs::read(dir.join(ENTRY_FILE)).ok()?).ok()?;
    let mut artifacts = Artifacts::default();
    for f in &entry.files {
        artifacts.files.insert(f.clone(), std::fs::read(dir.join(f)).ok()?);
    }
    Some(Outcome { artifacts, n_floquet_solves: entry.n_floquet_solves, details: entry.details })
}

/// Stores an outcome; written to a temporary directory first so a crash
/// never leaves a half entry under the final key.
pub fn store(root: &Path, key: &str, out: &Outcome) -> Result<(), CliError> {
    std::fs::create_dir_all(root)?;
    let tmp = root.join(format!(".{key}.{}", std::process::id()));
    if tmp.exists() {
        std::fs::remove_dir_all(&tmp)?;
    }
    std::fs::create_dir_all(&tmp)?;
    for (name, bytes) in &out.artifacts.files {
        std::fs::write(tmp.join(name), bytes)?;
    }
    let entry = Entry {
        files: out.artifacts.files.keys().cloned().collect(),
        n_floquet_solves: out.n_floquet_solves,
        details: out.details.clone(),
    };
    std::fs::write(tmp.join(ENTRY_FILE), serde_json::to_vec(&entry)?)?;
    let dest = root.join(key);
    if dest.exists() {
        std::fs::remove_dir_all(&dest)?;
    }
    std::fs::rename(&tmp, &dest)?;
    Ok(())
}
