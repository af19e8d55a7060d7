//! Run manifest: what was run, with which scenario, and what it wrote.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

pub fn unix_millis() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_millis() as u64)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileRecord {
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunRecord {
    pub command: String,
    /// Resolved scenario written next to the outputs.
    pub scenario_file: String,
    pub scenario_sha256: String,
    pub seed: u64,
    pub started_unix_ms: u64,
    pub finished_unix_ms: u64,
    pub outputs: Vec<FileRecord>,
}

/// One manifest per output directory; each command keeps its latest run.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub runs: BTreeMap<String, RunRecord>,
}

impl RunManifest {
    pub fn new() -> Self {
        Self { tool: "recoilslit".into(), version: env!("CARGO_PKG_VERSION").into(), runs: BTreeMap::new() }
    }

    /// Reads the manifest in `dir`, or starts a fresh one if there is none
    /// or it cannot be parsed.
    pub fn load_or_new(dir: &Path) -> Self {
        std::fs::read_to_string(dir.join(MANIFEST_FILE))
            .ok()
            .and_then(|s| serde_json::from_str::<Self>(&s).ok())
            .map(|mut m| {
                m.version = env!("CARGO_PKG_VERSION").into();
                m
            })
            .unwrap_or_default()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("manifest serializes");
        s.push('\n');
        s
    }
}

impl Default for RunManifest {
    fn default() -> Self {
        Self::new()
    }
}
