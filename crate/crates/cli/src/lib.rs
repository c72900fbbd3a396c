//! Driver for the `qkam` binary: config resolution, cache, and the output
//! directory contract.

pub mod cache;
pub mod commands;
pub mod config;
pub mod error;
pub mod export;

use std::path::PathBuf;

use serde::Serialize;

use crate::commands::Command;
use crate::config::RunConfig;
use crate::error::CliError;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: &'static str,
    pub cache_key: String,
    pub cache_hit: bool,
    /// Diagonalizations done by this invocation; zero on a cache hit.
    pub n_floquet_solves: usize,
    /// Diagonalizations behind the results, wherever they were computed.
    pub n_floquet_solves_original: usize,
    pub files: Vec<String>,
    pub details: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct RunSummary {
    pub out_dir: PathBuf,
    pub manifest: Manifest,
}

/// Runs one command with an already resolved config.
pub fn run(command: Command, cfg: &RunConfig, cache_root: Option<PathBuf>) -> Result<RunSummary, CliError> {
    let key = cache::key(command.name(), &command.cache_inputs(cfg));
    let root = cache_root.unwrap_or_else(cache::default_root);
    let cached = if cfg.cache { cache::load(&root, &key) } else { None };
    let cache_hit = cached.is_some();
    let outcome = match cached {
        Some(o) => o,
        None => {
            let o = command.execute(cfg)?;
            if cfg.cache {
                if let Err(e) = cache::store(&root, &key, &o) {
                    log::warn!("cache store failed: {e}");
                }
            }
            o
        }
    };
    let manifest = Manifest {
        tool: "qkam",
        version: env!("CARGO_PKG_VERSION"),
        command: command.name(),
        cache_key: key,
        cache_hit,
        n_floquet_solves: if cache_hit { 0 } else { outcome.n_floquet_solves },
        n_floquet_solves_original: outcome.n_floquet_solves,
        files: outcome.artifacts.files.keys().cloned().collect(),
        details: outcome.details.clone(),
    };
    let out_dir = cfg.out_dir();
    let mut config_bytes = serde_json::to_vec_pretty(cfg)?;
    config_bytes.push(b'\n');
    let mut manifest_bytes = serde_json::to_vec_pretty(&manifest)?;
    manifest_bytes.push(b'\n');
    export::write_output_dir(&out_dir, &config_bytes, &manifest_bytes, &outcome.artifacts)?;
    Ok(RunSummary { out_dir, manifest })
}
