//! Errors, exit codes, file digests and all-or-nothing output commits.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Config(String),
    #[error("{0:#}")]
    Runtime(#[from] anyhow::Error),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }
}

pub fn runtime(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(anyhow::anyhow!("{e}"))
}

/// Missing inputs are configuration errors.
pub fn require_file(path: &Path, what: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Config(format!("{what} not found: {}", path.display())))
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FileDigest {
    pub path: String,
    pub sha256: String,
}

impl FileDigest {
    pub fn of_file(path: &Path) -> Result<Self, CliError> {
        let bytes = std::fs::read(path).map_err(|e| runtime(format!("{}: {e}", path.display())))?;
        Ok(FileDigest {
            path: path.display().to_string(),
            sha256: sha256_hex(&bytes),
        })
    }
}

/// Files to write together. Nothing is visible under its final name until
/// every temporary file is written; on failure all of them are removed.
#[derive(Default)]
pub struct Outputs {
    files: Vec<(PathBuf, Vec<u8>)>,
}

impl Outputs {
    pub fn add(&mut self, path: impl Into<PathBuf>, bytes: impl Into<Vec<u8>>) {
        self.files.push((path.into(), bytes.into()));
    }

    pub fn digests(&self, relative_to: Option<&Path>) -> Vec<FileDigest> {
        self.files
            .iter()
            .map(|(p, b)| {
                let shown = relative_to.and_then(|base| p.strip_prefix(base).ok()).unwrap_or(p);
                FileDigest {
                    path: shown.display().to_string(),
                    sha256: sha256_hex(b),
                }
            })
            .collect()
    }

    pub fn commit(self) -> Result<Vec<PathBuf>, CliError> {
        let mut staged: Vec<(PathBuf, PathBuf)> = Vec::new();
        let cleanup = |paths: &[(PathBuf, PathBuf)]| {
            for (tmp, _) in paths {
                let _ = std::fs::remove_file(tmp);
            }
        };
        for (path, bytes) in &self.files {
            let tmp = tmp_name(path);
            let written = path
                .parent()
                .filter(|p| !p.as_os_str().is_empty())
                .map_or(Ok(()), std::fs::create_dir_all)
                .and_then(|_| std::fs::write(&tmp, bytes));
            if let Err(e) = written {
                let _ = std::fs::remove_file(&tmp);
                cleanup(&staged);
                return Err(runtime(format!("cannot write {}: {e}", path.display())));
            }
            staged.push((tmp, path.clone()));
        }
        let mut done = Vec::new();
        for (i, (tmp, path)) in staged.iter().enumerate() {
            if let Err(e) = std::fs::rename(tmp, path) {
                for p in &done {
                    let _ = std::fs::remove_file(p);
                }
                cleanup(&staged[i..]);
                return Err(runtime(format!("cannot move {} into place: {e}", path.display())));
            }
            done.push(path.clone());
        }
        Ok(done)
    }
}

fn tmp_name(path: &Path) -> PathBuf {
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!(".{name}.partial-{}", std::process::id()))
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let name = artifact.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    artifact.with_file_name(format!("{name}.manifest.json"))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn commit_is_all_or_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let blocker = dir.path().join("blocker");
        std::fs::write(&blocker, "x").unwrap();
        let mut out = Outputs::default();
        out.add(dir.path().join("a.txt"), "a");
        out.add(blocker.join("b.txt"), "b");
        assert!(out.commit().is_err());
        let names: Vec<_> = std::fs::read_dir(dir.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
        assert_eq!(names, vec![std::ffi::OsString::from("blocker")]);

        let mut out = Outputs::default();
        out.add(dir.path().join("sub/a.txt"), "a");
        out.commit().unwrap();
        assert_eq!(std::fs::read_to_string(dir.path().join("sub/a.txt")).unwrap(), "a");
    }
}
