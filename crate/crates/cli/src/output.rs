//! Artifact writing: JSON files, checksums and run manifests.

use std::fs;
use std::path::{Path, PathBuf};

use fastpls::{Error, Result};
use serde::Serialize;
use serde_json::{json, Value};
use sha2::{Digest, Sha256};

pub const REPORT_FORMAT_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    digest.iter().map(|b| format!("{b:02x}")).collect()
}

/// Collects the files a run writes so the manifest can list them.
pub struct Artifacts {
    dir: PathBuf,
    entries: Vec<Value>,
}

impl Artifacts {
    pub fn new(dir: &Path) -> Result<Self> {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            entries: Vec::new(),
        })
    }

    pub fn write_bytes(&mut self, name: &str, format: &str, bytes: &[u8]) -> Result<String> {
        let path = self.dir.join(name);
        fs::write(&path, bytes).map_err(|e| Error::io(&path, e))?;
        let sum = sha256_hex(bytes);
        self.entries.push(json!({
            "file": name,
            "format": format,
            "bytes": bytes.len(),
            "sha256": sum,
        }));
        Ok(sum)
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<String> {
        let mut text = serde_json::to_string_pretty(value).expect("report values serialize");
        text.push('\n');
        self.write_bytes(name, &format!("json/v{REPORT_FORMAT_VERSION}"), text.as_bytes())
    }

    /// Writes `manifest.json` with the resolved configuration and every
    /// artifact written so far.
    pub fn finish(self, command: &str, config: Value, threads: usize) -> Result<()> {
        let manifest = json!({
            "tool": "fastpls",
            "version": fastpls::VERSION,
            "manifest_format_version": REPORT_FORMAT_VERSION,
            "command": command,
            "threads": threads,
            "config": config,
            "artifacts": self.entries,
        });
        let mut text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
        text.push('\n');
        let path = self.dir.join("manifest.json");
        fs::write(&path, text).map_err(|e| Error::io(&path, e))
    }
}

/// Header fields shared by every JSON report.
pub fn report_header(kind: &str) -> serde_json::Map<String, Value> {
    let mut m = serde_json::Map::new();
    m.insert("report".into(), json!(kind));
    m.insert("format_version".into(), json!(REPORT_FORMAT_VERSION));
    m.insert("fastpls_version".into(), json!(fastpls::VERSION));
    m
}

pub fn with_header<T: Serialize>(kind: &str, body: &T) -> Value {
    let mut m = report_header(kind);
    if let Value::Object(fields) = serde_json::to_value(body).expect("report values serialize") {
        m.extend(fields);
    }
    Value::Object(m)
}
