// Copyright 2026 The cvent Authors
// SPDX-License-Identifier: Apache-2.0

//! Output files and the run manifest that every one of them points to.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{CliError, CliResult};

pub const MANIFEST_SCHEMA_VERSION: u32 = 1;

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunManifest {
    pub schema_version: u32,
    pub tool: String,
    pub version: String,
    pub command: String,
    /// SHA-256 of the canonical JSON of `config`.
    pub config_sha256: String,
    pub config: serde_json::Value,
    pub seed: Option<u64>,
    pub timestamp: String,
    pub inputs: Vec<FileDigest>,
    pub outputs: Vec<FileDigest>,
}

/// Canonical config bytes and their hash.
pub fn config_digest<T: Serialize>(config: &T) -> CliResult<(serde_json::Value, String)> {
    let value = serde_json::to_value(config).map_err(|e| CliError::Usage(e.to_string()))?;
    let bytes = serde_json::to_vec(&value).map_err(|e| CliError::Usage(e.to_string()))?;
    Ok((value, sha256_hex(&bytes)))
}

/// RFC 3339 UTC; honours SOURCE_DATE_EPOCH so manifests can be pinned too.
fn timestamp() -> String {
    let pinned = std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse::<i64>().ok())
        .and_then(|s| chrono::DateTime::from_timestamp(s, 0));
    pinned
        .unwrap_or_else(chrono::Utc::now)
        .to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

/// Collects outputs of one command run and writes its manifest last.
///
/// Data files depend only on the config and inputs; the timestamp lives in
/// the manifest alone so reruns produce byte-identical data.
pub struct RunOutput {
    dir: PathBuf,
    command: String,
    config: serde_json::Value,
    config_sha256: String,
    seed: Option<u64>,
    inputs: Vec<FileDigest>,
    outputs: Vec<FileDigest>,
}

impl RunOutput {
    pub fn new<T: Serialize>(dir: &Path, command: &str, config: &T, seed: Option<u64>) -> CliResult<Self> {
        fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
        let (config, config_sha256) = config_digest(config)?;
        Ok(Self {
            dir: dir.to_path_buf(),
            command: command.to_string(),
            config,
            config_sha256,
            seed,
            inputs: Vec::new(),
            outputs: Vec::new(),
        })
    }

    pub fn manifest_name(&self) -> String {
        format!("{}.manifest.json", self.command)
    }

    pub fn add_input(&mut self, path: &Path, bytes: &[u8]) {
        self.inputs.push(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(bytes),
        });
    }

    fn put(&mut self, name: &str, bytes: &[u8]) -> CliResult<()> {
        let path = self.dir.join(name);
        let mut f = fs::File::create(&path).map_err(|e| CliError::io(&path, e))?;
        f.write_all(bytes).map_err(|e| CliError::io(&path, e))?;
        self.outputs.push(FileDigest {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    /// Writes `body` after two `#` lines naming the manifest and config hash.
    pub fn write_csv(&mut self, name: &str, body: &[u8]) -> CliResult<()> {
        let mut bytes = format!(
            "# manifest={}\n# config_sha256={}\n",
            self.manifest_name(),
            self.config_sha256
        )
        .into_bytes();
        bytes.extend_from_slice(body);
        self.put(name, &bytes)
    }

    /// Writes a JSON object with `manifest` and `config_sha256` keys added.
    pub fn write_json(&mut self, name: &str, value: serde_json::Value) -> CliResult<()> {
        let mut obj = serde_json::Map::new();
        obj.insert("manifest".into(), self.manifest_name().into());
        obj.insert("config_sha256".into(), self.config_sha256.clone().into());
        match value {
            serde_json::Value::Object(m) => obj.extend(m),
            other => {
                obj.insert("result".into(), other);
            }
        }
        let mut bytes = serde_json::to_vec_pretty(&serde_json::Value::Object(obj))
            .map_err(|e| CliError::Usage(e.to_string()))?;
        bytes.push(b'\n');
        self.put(name, &bytes)
    }

    pub fn finish(self) -> CliResult<RunManifest> {
        let manifest = RunManifest {
            schema_version: MANIFEST_SCHEMA_VERSION,
            tool: "cvent".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            command: self.command.clone(),
            config_sha256: self.config_sha256.clone(),
            config: self.config.clone(),
            seed: self.seed,
            timestamp: timestamp(),
            inputs: self.inputs.clone(),
            outputs: self.outputs.clone(),
        };
        let path = self.dir.join(self.manifest_name());
        let mut bytes =
            serde_json::to_vec_pretty(&manifest).map_err(|e| CliError::Usage(e.to_string()))?;
        bytes.push(b'\n');
        fs::write(&path, bytes).map_err(|e| CliError::io(&path, e))?;
        Ok(manifest)
    }
}

/// Reads and parses a JSON file; parse errors carry line and column.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<(T, Vec<u8>)> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    let value = serde_json::from_slice(&bytes).map_err(|source| CliError::Config {
        path: path.to_path_buf(),
        source,
    })?;
    Ok((value, bytes))
}

/// Shortest round-trip representation.
pub fn num(x: f64) -> String {
    format!("{x}")
}
