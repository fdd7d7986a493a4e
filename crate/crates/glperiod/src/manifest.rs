//! Run manifests: config echo, versions, timestamps, hashed artifact index
//! and headline numbers.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

pub const MANIFEST_NAME: &str = "manifest.json";

/// Writes `bytes` to `path` through a temporary file in the same directory
/// and a rename, so readers never see a partial file.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> anyhow::Result<()> {
    let dir = path.parent().unwrap_or(Path::new("."));
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    let name = path.file_name().context("artifact path has no file name")?;
    let tmp = dir.join(format!(".{}.tmp-{}", name.to_string_lossy(), std::process::id()));
    {
        let mut f = fs::File::create(&tmp).with_context(|| format!("creating {}", tmp.display()))?;
        f.write_all(bytes)?;
        f.sync_all()?;
    }
    fs::rename(&tmp, path).with_context(|| format!("renaming onto {}", path.display()))?;
    Ok(())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Artifact {
    /// Path relative to the manifest's directory.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Headline {
    pub converged: Option<bool>,
    pub iterations: Option<usize>,
    pub c_estimate: Option<f64>,
    pub contraction_factor: Option<f64>,
    pub periodicity_residual: Option<f64>,
    pub equation_residual: Option<f64>,
    pub fitted_slope_l0: Option<f64>,
    pub fitted_slope_l1: Option<f64>,
    pub escaped: Option<bool>,
    pub checks_passed: Option<usize>,
    pub checks_total: Option<usize>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Versions {
    pub glperiod: String,
    pub glperiod_core: String,
}

impl Default for Versions {
    fn default() -> Self {
        Self {
            glperiod: env!("CARGO_PKG_VERSION").to_string(),
            // Both crates share the workspace version.
            glperiod_core: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RunManifest {
    pub command: String,
    /// `ok`, `diverged`, `failed` or `escaped`.
    pub status: String,
    pub config: serde_json::Value,
    pub versions: Versions,
    pub started_at: String,
    pub finished_at: String,
    pub artifacts: Vec<Artifact>,
    pub headline: Headline,
}

/// Collects artifacts under one output directory.
pub struct ArtifactWriter {
    root: PathBuf,
    artifacts: Vec<Artifact>,
}

impl ArtifactWriter {
    pub fn new(root: &Path) -> anyhow::Result<Self> {
        fs::create_dir_all(root).with_context(|| format!("creating {}", root.display()))?;
        Ok(Self {
            root: root.to_path_buf(),
            artifacts: Vec::new(),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn write(&mut self, relative: &str, bytes: &[u8]) -> anyhow::Result<PathBuf> {
        let path = self.root.join(relative);
        write_atomic(&path, bytes)?;
        self.artifacts.retain(|a| a.path != relative);
        self.artifacts.push(Artifact {
            path: relative.to_string(),
            sha256: sha256_hex(bytes),
            bytes: bytes.len() as u64,
        });
        Ok(path)
    }

    pub fn write_json<T: Serialize>(&mut self, relative: &str, value: &T) -> anyhow::Result<PathBuf> {
        let mut bytes = serde_json::to_vec_pretty(value)?;
        bytes.push(b'\n');
        self.write(relative, &bytes)
    }

    /// Writes the manifest itself (not indexed) and returns its path.
    pub fn finish(
        self,
        command: &str,
        status: &str,
        config: serde_json::Value,
        started_at: String,
        headline: Headline,
    ) -> anyhow::Result<PathBuf> {
        let manifest = RunManifest {
            command: command.to_string(),
            status: status.to_string(),
            config,
            versions: Versions::default(),
            started_at,
            finished_at: now(),
            artifacts: self.artifacts,
            headline,
        };
        let path = self.root.join(MANIFEST_NAME);
        let mut bytes = serde_json::to_vec_pretty(&manifest)?;
        bytes.push(b'\n');
        write_atomic(&path, &bytes)?;
        Ok(path)
    }
}

pub fn now() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true)
}

pub fn read_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let text = fs::read_to_string(path).with_context(|| format!("reading manifest {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing manifest {}", path.display()))
}

/// Re-hashes every indexed artifact; fails on a missing or altered file.
pub fn verify_manifest(path: &Path) -> anyhow::Result<RunManifest> {
    let manifest = read_manifest(path)?;
    let dir = path.parent().unwrap_or(Path::new("."));
    for a in &manifest.artifacts {
        let file = dir.join(&a.path);
        let bytes = fs::read(&file).with_context(|| format!("artifact {} is missing", a.path))?;
        let hash = sha256_hex(&bytes);
        if hash != a.sha256 {
            bail!("artifact {} does not match its hash (expected {}, found {hash})", a.path, a.sha256);
        }
    }
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sha256_known_value() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_detects_corruption() {
        let dir = tempfile::tempdir().unwrap();
        let mut w = ArtifactWriter::new(dir.path()).unwrap();
        w.write("a/data.csv", b"t,x\n0,1\n").unwrap();
        w.write_json("report.json", &serde_json::json!({"k": 1})).unwrap();
        let path = w
            .finish("test", "ok", serde_json::Value::Null, now(), Headline::default())
            .unwrap();
        let m = verify_manifest(&path).unwrap();
        assert_eq!(m.artifacts.len(), 2);
        fs::write(dir.path().join("a/data.csv"), b"t,x\n0,2\n").unwrap();
        assert!(verify_manifest(&path).is_err());
        fs::remove_file(dir.path().join("a/data.csv")).unwrap();
        assert!(verify_manifest(&path).is_err());
    }

    #[test]
    fn atomic_write_leaves_no_temporaries() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.json");
        write_atomic(&p, b"1").unwrap();
        write_atomic(&p, b"2").unwrap();
        assert_eq!(fs::read(&p).unwrap(), b"2");
        assert_eq!(fs::read_dir(dir.path()).unwrap().count(), 1);
    }
}
