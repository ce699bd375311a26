use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};

/// Schema version written into every artifact.
pub const SCHEMA_VERSION: u32 = 1;

/// Self-describing wrapper around a persisted value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Envelope<T> {
    pub kind: String,
    pub version: u32,
    /// SHA-256 of the canonical run configuration, hex encoded.
    pub config_hash: String,
    pub seed: u64,
    pub body: T,
}

#[derive(Deserialize)]
struct Header {
    kind: String,
    version: u32,
}

/// SHA-256 of the compact JSON form of `value`, hex encoded.
pub fn config_hash<T: Serialize>(value: &T) -> Result<String> {
    let bytes = serde_json::to_vec(value).map_err(|e| Error::config(format!("unserializable configuration: {e}")))?;
    Ok(hex::encode(Sha256::digest(&bytes)))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

/// Replaces `path` with `bytes` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    fs::create_dir_all(&dir).map_err(io_err(&dir))?;
    let name = path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
    let tmp = dir.join(format!(".{name}.{}.tmp", std::process::id()));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes `body` wrapped in an envelope of kind `kind`.
pub fn save<T: Serialize>(path: &Path, kind: &str, config_hash: &str, seed: u64, body: &T) -> Result<()> {
    let env = Envelope { kind: kind.to_string(), version: SCHEMA_VERSION, config_hash: config_hash.to_string(), seed, body };
    let mut bytes = serde_json::to_vec_pretty(&env).map_err(|source| Error::Parse { path: path.to_path_buf(), source })?;
    bytes.push(b'\n');
    write_atomic(path, &bytes)
}

/// Reads an envelope of kind `kind`, checking the schema version first.
pub fn load<T: DeserializeOwned>(path: &Path, kind: &str) -> Result<Envelope<T>> {
    let text = fs::read(path).map_err(io_err(path))?;
    let parse = |source| Error::Parse { path: path.to_path_buf(), source };
    let head: Header = serde_json::from_slice(&text).map_err(parse)?;
    if head.version != SCHEMA_VERSION {
        return Err(Error::Version { kind: head.kind, found: head.version, expected: SCHEMA_VERSION });
    }
    if head.kind != kind {
        return Err(Error::config(format!("{} holds a {} artifact, expected {kind}", path.display(), head.kind)));
    }
    serde_json::from_slice(&text).map_err(parse)
}
