//! Atomic CSV output and the run manifest written beside it.

use anyhow::{Context, Result};
use serde::Serialize;
use sha2::{Digest, Sha256};
use std::io::Write;
use std::path::{Path, PathBuf};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub campaign: String,
    pub version: String,
    pub seed: u64,
    pub threads: usize,
    /// SHA-256 of the config text as read.
    pub config_sha256: String,
    pub config: ExperimentConfig,
    pub csv_path: PathBuf,
    pub csv_sha256: String,
    pub rows: usize,
    pub wall_time_s: f64,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// `results.csv` -> `results.manifest.json`.
pub fn manifest_path(csv: &Path) -> PathBuf {
    csv.with_extension("manifest.json")
}

/// Writes via a temporary file in the same directory, then renames, so a
/// reader never sees a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let mut tmp = tempfile::NamedTempFile::new_in(dir)
        .with_context(|| format!("creating temporary file in {}", dir.display()))?;
    tmp.write_all(bytes)?;
    tmp.as_file().sync_all()?;
    tmp.persist(path)
        .map_err(|e| e.error)
        .with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

/// Writes the CSV and its manifest. If the manifest cannot be written the
/// CSV is removed again so no untraceable output is left behind.
pub fn write_outputs(csv_path: &Path, csv: &[u8], manifest: &Manifest) -> Result<()> {
    write_atomic(csv_path, csv)?;
    let json = serde_json::to_vec_pretty(manifest)?;
    if let Err(e) = write_atomic(&manifest_path(csv_path), &json) {
        let _ = std::fs::remove_file(csv_path);
        return Err(e);
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn digest_of_empty_input() {
        assert_eq!(
            sha256_hex(b""),
            "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855"
        );
    }

    #[test]
    fn manifest_sits_next_to_csv() {
        assert_eq!(
            manifest_path(Path::new("out/rmse.csv")),
            PathBuf::from("out/rmse.manifest.json")
        );
    }

    #[test]
    fn atomic_write_replaces_content() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.csv");
        write_atomic(&p, b"one").unwrap();
        write_atomic(&p, b"two").unwrap();
        assert_eq!(std::fs::read(&p).unwrap(), b"two");
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
