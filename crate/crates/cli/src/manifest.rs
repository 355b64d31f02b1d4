//! Sidecar provenance manifests.
//!
//! Every artifact `x` gets `x.manifest.json` holding the stage config, the
//! hashes of its inputs and of their manifests, and the hashes of its own
//! outputs. The `fingerprint` covers stage, config and input hashes; a stage
//! whose fingerprint and output hashes still match can be skipped.

use std::fs;
use std::io::Read;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::error::{CliError, Result};

pub const TOOL: &str = concat!("pushresp ", env!("CARGO_PKG_VERSION"));

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArtifactRef {
    pub path: String,
    pub sha256: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub manifest_sha256: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub stage: String,
    pub tool: String,
    pub fingerprint: String,
    pub config: Value,
    /// Whole pipeline config when the stage ran under `pipeline`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline_config: Option<Value>,
    pub inputs: Vec<ArtifactRef>,
    pub outputs: Vec<ArtifactRef>,
    #[serde(default)]
    pub details: Value,
    /// Seconds since the epoch; omitted in deterministic mode.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub created_unix: Option<u64>,
}

pub fn manifest_path(artifact: &Path) -> PathBuf {
    let mut s = artifact.as_os_str().to_owned();
    s.push(".manifest.json");
    PathBuf::from(s)
}

pub fn sha256_bytes(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

pub fn sha256_file(path: &Path) -> Result<String> {
    let mut f = fs::File::open(path).map_err(|e| CliError::io(path, e))?;
    let mut h = Sha256::new();
    let mut buf = vec![0u8; 1 << 20];
    loop {
        let n = f.read(&mut buf).map_err(|e| CliError::io(path, e))?;
        if n == 0 {
            break;
        }
        h.update(&buf[..n]);
    }
    Ok(hex::encode(h.finalize()))
}

/// Reference to an input artifact and, when present, its manifest.
pub fn input_ref(path: &Path) -> Result<ArtifactRef> {
    if !path.exists() {
        return Err(CliError::MissingArtifact(path.to_path_buf()));
    }
    let mp = manifest_path(path);
    let manifest_sha256 = if mp.exists() { Some(sha256_file(&mp)?) } else { None };
    Ok(ArtifactRef {
        path: path.display().to_string(),
        sha256: if path.is_dir() {
            dir_hash(path)?
        } else {
            sha256_file(path)?
        },
        manifest_sha256,
    })
}

/// Hash over the sorted names and contents of the files in a directory.
fn dir_hash(dir: &Path) -> Result<String> {
    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| CliError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    names.sort();
    let mut h = Sha256::new();
    for p in names {
        h.update(
            p.file_name()
                .map(|n| n.to_string_lossy().into_owned())
                .unwrap_or_default(),
        );
        h.update(sha256_file(&p)?);
    }
    Ok(hex::encode(h.finalize()))
}

pub fn output_ref(path: &Path) -> Result<ArtifactRef> {
    Ok(ArtifactRef {
        path: path.display().to_string(),
        sha256: sha256_file(path)?,
        manifest_sha256: None,
    })
}

pub fn fingerprint(stage: &str, config: &Value, inputs: &[ArtifactRef]) -> String {
    let doc = serde_json::json!({
        "stage": stage,
        "tool": TOOL,
        "config": config,
        "inputs": inputs.iter().map(|i| (&i.sha256, &i.manifest_sha256)).collect::<Vec<_>>(),
    });
    sha256_bytes(doc.to_string().as_bytes())
}

pub fn read_manifest(path: &Path) -> Result<Manifest> {
    let bytes = fs::read(path).map_err(|e| CliError::io(path, e))?;
    serde_json::from_slice(&bytes)
        .map_err(|e| CliError::io(path, std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

pub fn write_manifest(artifact: &Path, m: &Manifest) -> Result<()> {
    let path = manifest_path(artifact);
    let mut text = serde_json::to_string_pretty(m).expect("manifest serializes");
    text.push('\n');
    fs::write(&path, text).map_err(|e| CliError::io(&path, e))
}

/// True when `artifact`'s manifest has `fingerprint` and every listed output
/// still hashes as recorded.
pub fn is_current(artifact: &Path, fingerprint: &str) -> bool {
    let Ok(m) = read_manifest(&manifest_path(artifact)) else {
        return false;
    };
    m.fingerprint == fingerprint
        && m.outputs
            .iter()
            .all(|o| sha256_file(Path::new(&o.path)).is_ok_and(|h| h == o.sha256))
}

pub fn now_unix(deterministic: bool) -> Option<u64> {
    if deterministic {
        return None;
    }
    std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .ok()
        .map(|d| d.as_secs())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn known_digest() {
        assert_eq!(
            sha256_bytes(b"abc"),
            "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad"
        );
    }

    #[test]
    fn manifest_path_appends_suffix() {
        assert_eq!(
            manifest_path(Path::new("out/a.prms")),
            PathBuf::from("out/a.prms.manifest.json")
        );
    }

    #[test]
    fn fingerprint_tracks_config_and_inputs() {
        let c = serde_json::json!({"x": 1});
        let i = vec![ArtifactRef {
            path: "a".into(),
            sha256: "00".into(),
            manifest_sha256: None,
        }];
        let f = fingerprint("clean", &c, &i);
        assert_eq!(f, fingerprint("clean", &c, &i));
        assert_ne!(f, fingerprint("clean", &serde_json::json!({"x": 2}), &i));
        let j = vec![ArtifactRef {
            sha256: "01".into(),
            ..i[0].clone()
        }];
        assert_ne!(f, fingerprint("clean", &c, &j));
        // paths do not matter, contents do
        let k = vec![ArtifactRef {
            path: "b".into(),
            ..i[0].clone()
        }];
        assert_eq!(f, fingerprint("clean", &c, &k));
    }

    #[test]
    fn staleness_detection() {
        let dir = tempfile::tempdir().unwrap();
        let a = dir.path().join("a.txt");
        fs::write(&a, "hello").unwrap();
        let m = Manifest {
            stage: "t".into(),
            tool: TOOL.into(),
            fingerprint: "f".into(),
            config: Value::Null,
            pipeline_config: None,
            inputs: vec![],
            outputs: vec![output_ref(&a).unwrap()],
            details: Value::Null,
            created_unix: None,
        };
        write_manifest(&a, &m).unwrap();
        assert!(is_current(&a, "f"));
        assert!(!is_current(&a, "g"));
        fs::write(&a, "changed").unwrap();
        assert!(!is_current(&a, "f"));
    }
}
