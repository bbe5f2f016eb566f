//! Run manifests: a reproducibility record written atomically on success.

use std::path::{Path, PathBuf};
use std::time::Instant;

use plir_core::binio::FORMAT_VERSION;
use plir_core::{Error, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::CliConfig;

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct RunManifest {
    pub command: String,
    pub config_hash: String,
    pub inputs: Vec<FileDigest>,
    pub artifact_versions: ArtifactVersions,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<PathBuf>,
}

#[derive(Debug, Serialize)]
pub struct FileDigest {
    pub path: PathBuf,
    pub sha256: String,
}

#[derive(Debug, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct ArtifactVersions {
    pub index: u32,
    pub vector_store: u32,
    pub interaction_cache: u32,
    pub checkpoint: u32,
}

impl Default for ArtifactVersions {
    fn default() -> Self {
        ArtifactVersions {
            index: FORMAT_VERSION,
            vector_store: FORMAT_VERSION,
            interaction_cache: FORMAT_VERSION,
            checkpoint: FORMAT_VERSION,
        }
    }
}

/// Hash the fully-resolved configuration. JSON object keys serialize sorted,
/// so the hash is stable under field reordering in the config file.
pub fn config_hash(config: &CliConfig) -> String {
    let value = serde_json::to_value(config).expect("config serializes");
    let canonical = serde_json::to_string(&sort_json(value)).expect("canonical json");
    hex_digest(canonical.as_bytes())
}

fn sort_json(value: serde_json::Value) -> serde_json::Value {
    match value {
        serde_json::Value::Object(map) => {
            let mut sorted: Vec<(String, serde_json::Value)> = map.into_iter().collect();
            sorted.sort_by(|a, b| a.0.cmp(&b.0));
            serde_json::Value::Object(
                sorted
                    .into_iter()
                    .map(|(k, v)| (k, sort_json(v)))
                    .collect(),
            )
        }
        serde_json::Value::Array(items) => {
            serde_json::Value::Array(items.into_iter().map(sort_json).collect())
        }
        other => other,
    }
}

fn hex_digest(bytes: &[u8]) -> String {
    let digest = Sha256::digest(bytes);
    let mut out = String::with_capacity(64);
    for b in digest {
        out.push_str(&format!("{b:02x}"));
    }
    out
}

pub fn file_digest(path: &Path) -> Result<FileDigest> {
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Ok(FileDigest {
        path: path.to_path_buf(),
        sha256: hex_digest(&bytes),
    })
}

/// Tracks a command run and writes the manifest on success.
pub struct ManifestBuilder {
    command: String,
    config_hash: String,
    inputs: Vec<FileDigest>,
    outputs: Vec<PathBuf>,
    started: Instant,
}

impl ManifestBuilder {
    pub fn new(command: &str, config: &CliConfig) -> Self {
        ManifestBuilder {
            command: command.to_string(),
            config_hash: config_hash(config),
            inputs: Vec::new(),
            outputs: Vec::new(),
            started: Instant::now(),
        }
    }

    pub fn input(&mut self, path: &Path) -> Result<()> {
        self.inputs.push(file_digest(path)?);
        Ok(())
    }

    pub fn output(&mut self, path: impl Into<PathBuf>) {
        self.outputs.push(path.into());
    }

    pub fn write(self, out_dir: &Path) -> Result<()> {
        let manifest = RunManifest {
            command: self.command.clone(),
            config_hash: self.config_hash,
            inputs: self.inputs,
            artifact_versions: ArtifactVersions::default(),
            wall_clock_seconds: self.started.elapsed().as_secs_f64(),
            outputs: self.outputs,
        };
        let path = out_dir.join(format!("manifest-{}.json", self.command));
        plir_core::binio::atomic_write_text(&path, |w| {
            use std::io::Write;
            let json = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            writeln!(w, "{json}")
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_hash_is_stable_under_key_order() {
        // Same resolved config from differently ordered files.
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.toml");
        let p2 = dir.path().join("b.toml");
        std::fs::write(&p1, "[bm25]\nk1 = 1.1\nb = 0.5\n").unwrap();
        std::fs::write(&p2, "[bm25]\nb = 0.5\nk1 = 1.1\n").unwrap();
        let c1 = crate::config::load_config(Some(&p1), &[]).unwrap();
        let c2 = crate::config::load_config(Some(&p2), &[]).unwrap();
        assert_eq!(config_hash(&c1), config_hash(&c2));
    }

    #[test]
    fn different_configs_hash_differently() {
        let c1 = crate::config::load_config(None, &[]).unwrap();
        let c2 = crate::config::load_config(None, &[("bm25.k1".into(), "1.2".into())]).unwrap();
        assert_ne!(config_hash(&c1), config_hash(&c2));
    }
}
