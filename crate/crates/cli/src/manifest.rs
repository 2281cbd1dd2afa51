//! Run manifests: everything needed to reproduce an output file.

use std::collections::BTreeMap;
use std::path::Path;
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;
use sha2::{Digest, Sha256};

#[derive(Clone, Debug, Serialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: String,
    pub config: BTreeMap<String, String>,
    pub input_hashes: BTreeMap<String, String>,
    pub seed: u64,
    pub timestamp: u64,
    /// SHA-256 over every field except `timestamp` and this one.
    pub hash: String,
}

#[derive(Serialize)]
struct Hashed<'a> {
    tool: &'a str,
    version: &'a str,
    command: &'a str,
    config: &'a BTreeMap<String, String>,
    input_hashes: &'a BTreeMap<String, String>,
    seed: u64,
}

impl RunManifest {
    pub fn new(command: &str, seed: u64) -> Self {
        let mut m = RunManifest {
            tool: env!("CARGO_PKG_NAME").to_string(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            command: command.to_string(),
            config: BTreeMap::new(),
            input_hashes: BTreeMap::new(),
            seed,
            timestamp: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            hash: String::new(),
        };
        m.rehash();
        m
    }

    pub fn set(mut self, key: &str, value: impl ToString) -> Self {
        self.config.insert(key.to_string(), value.to_string());
        self.rehash();
        self
    }

    /// Records the SHA-256 of an input file's bytes.
    pub fn input(mut self, path: &Path) -> std::io::Result<Self> {
        let bytes = std::fs::read(path)?;
        self.input_hashes.insert(
            path.display().to_string(),
            hex::encode(Sha256::digest(&bytes)),
        );
        self.rehash();
        Ok(self)
    }

    fn rehash(&mut self) {
        let h = Hashed {
            tool: &self.tool,
            version: &self.version,
            command: &self.command,
            config: &self.config,
            input_hashes: &self.input_hashes,
            seed: self.seed,
        };
        let json = serde_json::to_string(&h).expect("plain data serializes");
        self.hash = hex::encode(Sha256::digest(json.as_bytes()));
    }

    /// Writes `<out>.manifest.json` next to an output file.
    pub fn write_beside(&self, out: &Path) -> std::io::Result<()> {
        let mut name = out.as_os_str().to_owned();
        name.push(".manifest.json");
        let text = serde_json::to_string_pretty(self).expect("plain data serializes");
        std::fs::write(name, text + "\n")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hash_ignores_timestamp_only() {
        let a = RunManifest::new("solve", 3).set("strategy", "rsl");
        let mut b = RunManifest::new("solve", 3).set("strategy", "rsl");
        b.timestamp += 100;
        b.rehash();
        assert_eq!(a.hash, b.hash);
        let c = RunManifest::new("solve", 4).set("strategy", "rsl");
        assert_ne!(a.hash, c.hash);
        let d = RunManifest::new("solve", 3).set("strategy", "mv");
        assert_ne!(a.hash, d.hash);
    }
}
