//! Run manifests: what was run, with which resolved parameters, and the
//! digests of what it wrote.

use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub manifest_version: u32,
    pub command: String,
    /// Fully resolved parameters of the command; enough to re-run it.
    pub params: serde_json::Value,
    pub seed: Option<u64>,
    pub code_version: String,
    pub threads: usize,
    pub started_unix: f64,
    pub wall_clock_seconds: f64,
    /// sha256 of every output file, keyed by file name.
    pub outputs: BTreeMap<String, String>,
}

pub fn code_version() -> String {
    format!("llns {}", env!("CARGO_PKG_VERSION"))
}

pub fn sha256_file(path: &Path) -> io::Result<String> {
    let bytes = fs::read(path)?;
    let digest = Sha256::digest(&bytes);
    Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
}

pub fn digests(dir: &Path, files: &[String]) -> io::Result<BTreeMap<String, String>> {
    files
        .iter()
        .map(|f| Ok((f.clone(), sha256_file(&dir.join(f))?)))
        .collect()
}

impl RunManifest {
    pub fn write(&self, dir: &Path) -> io::Result<()> {
        let s = serde_json::to_string_pretty(self).expect("manifest serializes");
        fs::write(dir.join(MANIFEST_FILE), s + "\n")
    }

    pub fn read(path: &Path) -> io::Result<Self> {
        let s = fs::read_to_string(path)?;
        serde_json::from_str(&s).map_err(|e| io::Error::new(io::ErrorKind::InvalidData, e))
    }
}
