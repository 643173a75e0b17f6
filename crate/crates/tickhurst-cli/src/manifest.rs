//! Output directory handling: every artifact is built in memory, hashed,
//! then written, and `manifest.json` records the full set at the end.
//!
//! The manifest carries no timestamps, so two runs with the same inputs and
//! configuration produce byte-identical manifests.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use tickhurst::{Error, Result};

fn io_error(context: String, cause: std::io::Error) -> Error {
    Error::Io(std::io::Error::new(cause.kind(), format!("{context}: {cause}")))
}

pub struct OutputDir {
    root: PathBuf,
    /// name -> (byte length, sha256 hex)
    entries: BTreeMap<String, (u64, String)>,
}

#[derive(Serialize)]
struct ManifestArtifact<'a> {
    path: &'a str,
    bytes: u64,
    sha256: &'a str,
}

#[derive(Serialize)]
struct Manifest<'a, C: Serialize> {
    tool: &'static str,
    version: &'static str,
    command: &'a str,
    config: &'a C,
    artifacts: Vec<ManifestArtifact<'a>>,
}

impl OutputDir {
    pub fn create(root: &Path) -> Result<Self> {
        std::fs::create_dir_all(root).map_err(|e| {
            io_error(format!("cannot create output directory {}", root.display()), e)
        })?;
        Ok(OutputDir { root: root.to_path_buf(), entries: BTreeMap::new() })
    }

    /// Build an artifact into a buffer, hash it, and write it out.
    pub fn write(
        &mut self,
        name: &str,
        build: impl FnOnce(&mut Vec<u8>) -> Result<()>,
    ) -> Result<()> {
        let mut buffer = Vec::new();
        build(&mut buffer)?;
        self.write_bytes(name, &buffer)
    }

    pub fn write_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.write(name, |w| tickhurst::report::write_json(w, value))
    }

    fn write_bytes(&mut self, name: &str, bytes: &[u8]) -> Result<()> {
        let digest = hex::encode(Sha256::digest(bytes));
        let path = self.root.join(name);
        std::fs::write(&path, bytes)
            .map_err(|e| io_error(format!("cannot write {}", path.display()), e))?;
        self.entries.insert(name.to_string(), (bytes.len() as u64, digest));
        Ok(())
    }

    /// Write `manifest.json` listing every artifact written so far.
    pub fn finish(self, command: &str, config: &impl Serialize) -> Result<()> {
        let artifacts = self
            .entries
            .iter()
            .map(|(name, (bytes, sha256))| ManifestArtifact {
                path: name.as_str(),
                bytes: *bytes,
                sha256: sha256.as_str(),
            })
            .collect();
        let manifest =
            Manifest { tool: "tickhurst", version: env!("CARGO_PKG_VERSION"), command, config, artifacts };
        let mut buffer = Vec::new();
        tickhurst::report::write_json(&mut buffer, &manifest)?;
        let path = self.root.join("manifest.json");
        std::fs::write(&path, &buffer)
            .map_err(|e| io_error(format!("cannot write {}", path.display()), e))?;
        Ok(())
    }
}
