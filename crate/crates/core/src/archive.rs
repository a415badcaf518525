//! Run archives: files collected in memory, written in one pass, and listed
//! in `manifest.json` with SHA-256 hashes.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

pub const MANIFEST: &str = "manifest.json";

/// Twelve significant digits.
pub fn fmt12(x: f64) -> String {
    format!("{x:.11e}")
}

/// CSV with a leading `#` line documenting each column, then the header row.
pub fn csv_table(columns: &[(&str, &str)], rows: impl IntoIterator<Item = Vec<f64>>) -> String {
    let doc: Vec<String> = columns.iter().map(|(name, what)| format!("{name} = {what}")).collect();
    let mut out = format!("# {}\n", doc.join("; "));
    out.push_str(&columns.iter().map(|c| c.0).collect::<Vec<_>>().join(","));
    out.push('\n');
    for row in rows {
        out.push_str(&row.into_iter().map(fmt12).collect::<Vec<_>>().join(","));
        out.push('\n');
    }
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub path: String,
    pub sha256: String,
    pub bytes: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub files: Vec<ManifestEntry>,
}

#[derive(Debug, Clone, Default)]
pub struct RunArchive {
    files: BTreeMap<String, Vec<u8>>,
}

impl RunArchive {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, name: &str, bytes: impl Into<Vec<u8>>) {
        self.files.insert(name.to_string(), bytes.into());
    }

    pub fn add_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut text = serde_json::to_string_pretty(value)?;
        text.push('\n');
        self.add(name, text);
        Ok(())
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.files.keys().map(String::as_str)
    }

    /// Writes every file under `dir` (created if missing), then the manifest.
    pub fn write(&self, dir: &Path) -> Result<Manifest> {
        let io = |path: &Path| {
            let path = path.display().to_string();
            move |source| Error::IoFailure { path, source }
        };
        std::fs::create_dir_all(dir).map_err(io(dir))?;
        let mut entries = Vec::with_capacity(self.files.len());
        for (name, bytes) in &self.files {
            let path = dir.join(name);
            if let Some(parent) = path.parent() {
                std::fs::create_dir_all(parent).map_err(io(parent))?;
            }
            std::fs::write(&path, bytes).map_err(io(&path))?;
            entries.push(ManifestEntry {
                path: name.clone(),
                sha256: hex::encode(Sha256::digest(bytes)),
                bytes: bytes.len(),
            });
        }
        let manifest = Manifest { files: entries };
        let path = dir.join(MANIFEST);
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)? + "\n").map_err(io(&path))?;
        Ok(manifest)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digits() {
        assert_eq!(fmt12(std::f64::consts::PI), "3.14159265359e0");
        assert_eq!(fmt12(-1.5e-7), "-1.50000000000e-7");
    }

    #[test]
    fn csv_has_documented_header() {
        let csv = csv_table(&[("x", "node"), ("u", "value")], vec![vec![0.0, 1.0]]);
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "# x = node; u = value");
        assert_eq!(lines[1], "x,u");
        assert_eq!(lines[2], "0.00000000000e0,1.00000000000e0");
    }

    #[test]
    fn manifest_lists_files_and_is_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut archive = RunArchive::new();
        archive.add("b.csv", "1,2\n");
        archive.add_json("a.json", &serde_json::json!({"e": 1.25})).unwrap();
        let m1 = archive.write(&dir.path().join("one")).unwrap();
        let m2 = archive.write(&dir.path().join("two")).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(m1.files.iter().map(|e| e.path.as_str()).collect::<Vec<_>>(), ["a.json", "b.csv"]);
        let on_disk: Manifest =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("one").join(MANIFEST)).unwrap()).unwrap();
        assert_eq!(on_disk, m1);
        assert_eq!(m1.files[1].sha256, hex::encode(Sha256::digest(b"1,2\n")));
    }

    #[test]
    fn unwritable_target_is_an_io_failure() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("file");
        std::fs::write(&blocker, "x").unwrap();
        let mut archive = RunArchive::new();
        archive.add("a.txt", "x");
        assert!(matches!(archive.write(&blocker.join("sub")), Err(Error::IoFailure { .. })));
    }
}
