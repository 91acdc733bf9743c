//! Run manifests: every artifact written by a command is listed with its
//! content hash, and the manifest itself carries a hash over the config
//! echo, the file list, and the tool versions. Wall time is recorded but
//! excluded from the hash so reruns of the same config are bit-comparable.

use mckv_core::hash::sha256_hex;
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;
use crate::pipelines::CliError;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FileEntry {
    pub path: String,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub cli: String,
    pub core: String,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Manifest {
    pub command: String,
    pub config: ExperimentConfig,
    pub files: Vec<FileEntry>,
    pub versions: Versions,
    pub manifest_hash: String,
    /// informational only; not part of `manifest_hash`
    pub wall_time_ms: u128,
}

/// Collects artifacts, writes them under the run directory, and finalizes
/// the manifest.
pub struct RunWriter {
    dir: PathBuf,
    files: Vec<FileEntry>,
}

impl RunWriter {
    pub fn new(dir: &Path) -> Result<Self, CliError> {
        std::fs::create_dir_all(dir)
            .map_err(|e| CliError::Validation(format!("cannot create {}: {e}", dir.display())))?;
        Ok(RunWriter {
            dir: dir.to_path_buf(),
            files: Vec::new(),
        })
    }

    pub fn write(&mut self, name: &str, bytes: &[u8]) -> Result<(), CliError> {
        let path = self.dir.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| CliError::Runtime(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(FileEntry {
            path: name.to_string(),
            sha256: sha256_hex(bytes),
        });
        Ok(())
    }

    pub fn write_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value)
            .map_err(|e| CliError::Runtime(format!("serialize {name}: {e}")))?;
        self.write(name, text.as_bytes())
    }

    /// Write `manifest.json` and return the manifest hash.
    pub fn finalize(
        mut self,
        command: &str,
        config: &ExperimentConfig,
        wall_time_ms: u128,
    ) -> Result<Manifest, CliError> {
        self.files.sort_by(|a, b| a.path.cmp(&b.path));
        let versions = Versions {
            cli: env!("CARGO_PKG_VERSION").to_string(),
            core: mckv_core_version(),
        };
        let hashed = serde_json::json!({
            "command": command,
            "config": config,
            "files": self.files,
            "versions": versions,
        });
        let manifest_hash = sha256_hex(
            serde_json::to_string(&hashed)
                .map_err(|e| CliError::Runtime(format!("serialize manifest: {e}")))?
                .as_bytes(),
        );
        let manifest = Manifest {
            command: command.to_string(),
            config: config.clone(),
            files: self.files,
            versions,
            manifest_hash,
            wall_time_ms,
        };
        let text = serde_json::to_string_pretty(&manifest)
            .map_err(|e| CliError::Runtime(format!("serialize manifest: {e}")))?;
        std::fs::write(self.dir.join("manifest.json"), text)
            .map_err(|e| CliError::Runtime(format!("write manifest: {e}")))?;
        Ok(manifest)
    }
}

fn mckv_core_version() -> String {
    // workspace-pinned; the dependency carries its own version string
    "0.1.0".to_string()
}

/// Load and re-verify a manifest: every listed file must hash to its entry.
pub fn load_and_verify(dir: &Path) -> Result<Manifest, CliError> {
    let path = dir.join("manifest.json");
    let text = std::fs::read_to_string(&path)
        .map_err(|e| CliError::Validation(format!("missing manifest {}: {e}", path.display())))?;
    let manifest: Manifest = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("bad manifest: {e}")))?;
    for entry in &manifest.files {
        let bytes = std::fs::read(dir.join(&entry.path)).map_err(|e| {
            CliError::Validation(format!("missing artifact {}: {e}", entry.path))
        })?;
        let got = sha256_hex(&bytes);
        if got != entry.sha256 {
            return Err(CliError::Validation(format!(
                "artifact {} hash mismatch: manifest {}, actual {got}",
                entry.path, entry.sha256
            )));
        }
    }
    Ok(manifest)
}
