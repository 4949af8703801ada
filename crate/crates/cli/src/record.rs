//! Run records: a small JSON sidecar written next to every output artifact
//! with the arguments, seeds, config hash, tool version, and wall time of
//! the run that produced it. Timestamps live only here, so the artifacts
//! themselves stay byte-reproducible.

use anyhow::{Context, Result};
use serde::Serialize;
use std::fs;
use std::path::Path;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

#[derive(Debug, Clone, Serialize)]
pub struct RunRecord {
    tool: &'static str,
    version: &'static str,
    subcommand: &'static str,
    argv: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_path: Option<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    config_hash: Option<String>,
    created_unix_ms: u128,
    wall_ms: u128,
    #[serde(skip)]
    started: Instant,
}

impl RunRecord {
    pub fn start(subcommand: &'static str) -> RunRecord {
        RunRecord {
            tool: "cetrace",
            version: env!("CARGO_PKG_VERSION"),
            subcommand,
            argv: std::env::args().collect(),
            seed: None,
            config_path: None,
            config_hash: None,
            created_unix_ms: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_millis())
                .unwrap_or(0),
            wall_ms: 0,
            started: Instant::now(),
        }
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    /// Records the config path and an FNV-1a hash of its bytes.
    pub fn config(mut self, path: &Path) -> Result<Self> {
        let bytes =
            fs::read(path).with_context(|| format!("hashing {}", path.display()))?;
        self.config_path = Some(path.display().to_string());
        self.config_hash = Some(format!("fnv1a64:{:016x}", fnv1a64(&bytes)));
        Ok(self)
    }

    /// Writes `<artifact>.run.json`.
    pub fn finish(mut self, artifact: &Path) -> Result<()> {
        self.wall_ms = self.started.elapsed().as_millis();
        let mut name = artifact.as_os_str().to_os_string();
        name.push(".run.json");
        let text = serde_json::to_string_pretty(&self)?;
        fs::write(&name, text + "\n")?;
        Ok(())
    }
}

fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash: u64 = 0xcbf2_9ce4_8422_2325;
    for &b in bytes {
        hash ^= b as u64;
        hash = hash.wrapping_mul(0x0000_0100_0000_01b3);
    }
    hash
}
