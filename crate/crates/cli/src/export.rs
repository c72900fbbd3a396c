//! CSV tables and the output directory contract: resolved config, manifest,
//! data files and a SHA-256 index, nothing else.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::error::CliError;

pub const CONFIG_FILE: &str = "config.json";
pub const MANIFEST_FILE: &str = "manifest.json";
pub const CHECKSUM_FILE: &str = "checksums.sha256";

/// Plain decimal for `1e-4 ≤ |x| < 1e15`, shortest exponent form otherwise.
/// Both round-trip exactly; non-finite values become an empty field.
pub fn fmt_f64(x: f64) -> String {
    if !x.is_finite() {
        return String::new();
    }
    if x == 0.0 {
        return "0".into();
    }
    let a = x.abs();
    if (1e-4..1e15).contains(&a) {
        format!("{x}")
    } else {
        format!("{x:e}")
    }
}

pub fn fmt_opt(x: Option<f64>) -> String {
    x.map(fmt_f64).unwrap_or_default()
}

/// One CSV file held in memory until the run finishes.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Self { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_bytes(&self) -> Result<Vec<u8>, CliError> {
        let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
        w.write_record(&self.header)?;
        for r in &self.rows {
            w.write_record(r)?;
        }
        w.into_inner().map_err(|e| CliError::Io(e.to_string()))
    }
}

/// Files produced by a command, keyed by name.
#[derive(Debug, Default, Clone)]
pub struct Artifacts {
    pub files: BTreeMap<String, Vec<u8>>,
}

impl Artifacts {
    pub fn table(&mut self, name: &str, t: &Table) -> Result<(), CliError> {
        self.files.insert(name.to_string(), t.to_bytes()?);
        Ok(())
    }

    pub fn json<T: Serialize>(&mut self, name: &str, v: &T) -> Result<(), CliError> {
        let mut b = serde_json::to_vec_pretty(v)?;
        b.push(b'\n');
        self.files.insert(name.to_string(), b);
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    format!("{:x}", Sha256::digest(bytes))
}

/// Files a previous run left behind, read from its checksum index.
fn previous_files(dir: &Path) -> Vec<PathBuf> {
    let Ok(text) = std::fs::read_to_string(dir.join(CHECKSUM_FILE)) else {
        return Vec::new();
    };
    let mut out: Vec<PathBuf> = text.lines().filter_map(|l| l.split_once("  ").map(|(_, f)| dir.join(f))).collect();
    out.push(dir.join(CHECKSUM_FILE));
    out
}

/// Writes data files, config and manifest, then the checksum index.
pub fn write_output_dir(dir: &Path, config: &[u8], manifest: &[u8], data: &Artifacts) -> Result<(), CliError> {
    std::fs::create_dir_all(dir)?;
    for f in previous_files(dir) {
        if f.parent() == Some(dir) && f.is_file() {
            std::fs::remove_file(&f)?;
        }
    }
    let mut all: BTreeMap<&str, &[u8]> = data.files.iter().map(|(k, v)| (k.as_str(), v.as_slice())).collect();
    all.insert(CONFIG_FILE, config);
    all.insert(MANIFEST_FILE, manifest);
    let mut index = String::new();
    for (name, bytes) in &all {
        std::fs::write(dir.join(name), bytes)?;
        index.push_str(&format!("{}  {}\n", sha256_hex(bytes), name));
    }
    std::fs::write(dir.join(CHECKSUM_FILE), index)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_format() {
        assert_eq!(fmt_f64(0.0), "0");
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.5), "1.5");
        assert_eq!(fmt_f64(1e-4), "0.0001");
        assert_eq!(fmt_f64(2.5e-7), "2.5e-7");
        assert_eq!(fmt_f64(1e15), "1e15");
        assert_eq!(fmt_f64(f64::NAN), "");
    }

    #[test]
    fn table_bytes_have_header_and_newlines() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["1".into(), "x,y".into()]);
        assert_eq!(String::from_utf8(t.to_bytes().unwrap()).unwrap(), "a,b\n1,\"x,y\"\n");
    }
}
