use std::fs;
use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ArtifactDigest {
    /// Path relative to the output directory, `/`-separated.
    pub path: String,
    pub sha256: String,
    pub bytes: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct StageSeeds {
    pub synth: u64,
    pub swap: u64,
    pub tract_sample: u64,
    /// Per-unit CRR seeds are `derive(crr, unit, 0)`.
    pub crr: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub config_sha256: String,
    pub seed: u64,
    pub seeds: StageSeeds,
    pub stages: Vec<String>,
    pub artifacts: Vec<ArtifactDigest>,
}

pub(crate) fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

fn digest_file(path: &Path) -> Result<(String, u64)> {
    let mut file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    let mut total = 0u64;
    loop {
        let n = file.read(&mut buf).map_err(|e| Error::io(path, e))?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
        total += n as u64;
    }
    Ok((hex::encode(hasher.finalize()), total))
}

/// Checksums every file under `root`, skipping `exclude` (top-level names).
pub(crate) fn digest_tree(root: &Path, exclude: &[&str]) -> Result<Vec<ArtifactDigest>> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).map_err(|e| Error::io(&dir, e))? {
            let entry = entry.map_err(|e| Error::io(&dir, e))?;
            let path = entry.path();
            let rel = path.strip_prefix(root).expect("walked from root");
            if dir == root && exclude.iter().any(|x| rel == Path::new(x)) {
                continue;
            }
            if path.is_dir() {
                stack.push(path);
            } else {
                let (sha256, bytes) = digest_file(&path)?;
                let rel: Vec<String> = rel.components().map(|c| c.as_os_str().to_string_lossy().into_owned()).collect();
                out.push(ArtifactDigest {
                    path: rel.join("/"),
                    sha256,
                    bytes,
                });
            }
        }
    }
    out.sort_by(|a, b| a.path.cmp(&b.path));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_hex(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn tree_is_sorted_and_excludes() {
        let dir = tempfile::tempdir().unwrap();
        fs::create_dir_all(dir.path().join("b/c")).unwrap();
        fs::write(dir.path().join("b/c/x.txt"), "x").unwrap();
        fs::write(dir.path().join("a.txt"), "abc").unwrap();
        fs::write(dir.path().join("manifest.json"), "{}").unwrap();
        let d = digest_tree(dir.path(), &["manifest.json"]).unwrap();
        let paths: Vec<&str> = d.iter().map(|a| a.path.as_str()).collect();
        assert_eq!(paths, ["a.txt", "b/c/x.txt"]);
        assert_eq!(d[0].bytes, 3);
    }
}
