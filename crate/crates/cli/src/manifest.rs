//! Run manifests: command, seed, effective configuration and SHA-256
//! hashes of every input read and artifact written.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::PipelineConfig;
use crate::CliError;

pub const MANIFEST_NAME: &str = "manifest.toml";

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub tool: String,
    pub command: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    pub arguments: BTreeMap<String, String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub config: Option<PipelineConfig>,
    pub inputs: BTreeMap<String, String>,
    pub artifacts: BTreeMap<String, String>,
}

pub fn sha256_file(path: &Path) -> Result<String, CliError> {
    let bytes = fs::read(path).map_err(|e| CliError::Data(format!("{}: {e}", path.display())))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

/// `path` relative to `base` with `/` separators.
fn relative_key(path: &Path, base: &Path) -> String {
    let rel = path.strip_prefix(base).unwrap_or(path);
    rel.components()
        .map(|c| c.as_os_str().to_string_lossy().into_owned())
        .collect::<Vec<_>>()
        .join("/")
}

impl Manifest {
    pub fn new(command: &str, seed: Option<u64>) -> Self {
        Self {
            tool: format!("semg-meet {}", env!("CARGO_PKG_VERSION")),
            command: command.into(),
            seed,
            arguments: BTreeMap::new(),
            config: None,
            inputs: BTreeMap::new(),
            artifacts: BTreeMap::new(),
        }
    }

    pub fn argument(mut self, key: &str, value: impl ToString) -> Self {
        self.arguments.insert(key.into(), value.to_string());
        self
    }

    /// Echoes `config` without its output directory, so runs that differ
    /// only in where they write produce the same manifest.
    pub fn config(mut self, config: &PipelineConfig, seed: Option<u64>) -> Self {
        let mut echo = config.clone();
        echo.output_dir = None;
        echo.seed = seed.or(config.seed);
        self.config = Some(echo);
        self
    }

    pub fn input(&mut self, key: String, path: &Path) -> Result<(), CliError> {
        self.inputs.insert(key, sha256_file(path)?);
        Ok(())
    }

    pub fn artifacts(&mut self, base: &Path, paths: &[PathBuf]) -> Result<(), CliError> {
        for p in paths {
            self.artifacts
                .insert(relative_key(p, base), sha256_file(p)?);
        }
        Ok(())
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("manifest serializes")
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_toml())
            .map_err(|e| CliError::Data(format!("{}: {e}", path.display())))
    }
}

/// `<dir>/<stem>.manifest.toml` for a single-file output `<dir>/<stem>.<ext>`.
pub fn sidecar_path(output: &Path) -> PathBuf {
    let stem = output
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| "output".into());
    output.with_file_name(format!("{stem}.{MANIFEST_NAME}"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hashes_and_keys() {
        let dir = tempfile::tempdir().unwrap();
        let sub = dir.path().join("a");
        fs::create_dir_all(&sub).unwrap();
        let f = sub.join("x.csv");
        fs::write(&f, "abc").unwrap();
        let mut m = Manifest::new("test", Some(1));
        m.artifacts(dir.path(), &[f]).unwrap();
        assert_eq!(
            m.artifacts["a/x.csv"],
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
        let text = m.to_toml();
        assert!(text.contains("command = \"test\""));
    }

    #[test]
    fn sidecar_names() {
        assert_eq!(
            sidecar_path(Path::new("out/model.json")),
            Path::new("out/model.manifest.toml")
        );
    }
}
