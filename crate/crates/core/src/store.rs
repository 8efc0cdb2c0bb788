//! Content-addressed blob store.
//!
//! Local stand-in for a distributed file network: every payload is
//! retrievable by the SHA-256 of its bytes, identical payloads deduplicate,
//! and nothing is ever deleted or overwritten through this API.

use std::collections::HashMap;
use std::fmt;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::RwLock;

use sha2::{Digest, Sha256};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum StoreError {
    #[error("empty payloads are not storable")]
    EmptyPayload,
    #[error("no blob stored under {0}")]
    NotFound(ContentHash),
    #[error("blob integrity failure: requested {requested}, stored bytes hash to {actual}")]
    Integrity {
        requested: ContentHash,
        actual: ContentHash,
    },
    #[error("malformed content hash {0:?}")]
    MalformedHash(String),
    #[error("store i/o at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// SHA-256 digest of a payload, rendered as lowercase hex.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct ContentHash([u8; 32]);

impl ContentHash {
    pub fn of(payload: &[u8]) -> Self {
        ContentHash(Sha256::digest(payload).into())
    }

    pub fn as_bytes(&self) -> &[u8; 32] {
        &self.0
    }

    pub fn to_hex(&self) -> String {
        hex::encode(self.0)
    }
}

impl fmt::Display for ContentHash {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_hex())
    }
}

impl FromStr for ContentHash {
    type Err = StoreError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let bytes = hex::decode(s).map_err(|_| StoreError::MalformedHash(s.to_string()))?;
        let digest: [u8; 32] = bytes
            .try_into()
            .map_err(|_| StoreError::MalformedHash(s.to_string()))?;
        Ok(ContentHash(digest))
    }
}

/// Append-only content-addressed storage.
///
/// Implementations must be safe under concurrent `put`/`get` from multiple
/// threads. There is deliberately no delete or overwrite operation.
pub trait BlobStore: Send + Sync {
    /// Stores a payload and returns its content hash. Identical bytes
    /// produce the identical hash and are stored once.
    fn put(&self, payload: &[u8]) -> Result<ContentHash, StoreError>;

    /// Retrieves a payload, verifying on read that the stored bytes still
    /// hash to the requested address.
    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StoreError>;

    /// Number of distinct blobs held.
    fn blob_count(&self) -> usize;
}

/// In-memory store for tests and single-process pipelines.
#[derive(Default)]
pub struct MemStore {
    blobs: RwLock<HashMap<ContentHash, Vec<u8>>>,
}

impl MemStore {
    pub fn new() -> Self {
        Self::default()
    }
}

impl BlobStore for MemStore {
    fn put(&self, payload: &[u8]) -> Result<ContentHash, StoreError> {
        if payload.is_empty() {
            return Err(StoreError::EmptyPayload);
        }
        let hash = ContentHash::of(payload);
        self.blobs
            .write()
            .expect("store lock")
            .entry(hash)
            .or_insert_with(|| payload.to_vec());
        Ok(hash)
    }

    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StoreError> {
        let blobs = self.blobs.read().expect("store lock");
        let payload = blobs.get(hash).ok_or(StoreError::NotFound(*hash))?;
        let actual = ContentHash::of(payload);
        if actual != *hash {
            return Err(StoreError::Integrity {
                requested: *hash,
                actual,
            });
        }
        Ok(payload.clone())
    }

    fn blob_count(&self) -> usize {
        self.blobs.read().expect("store lock").len()
    }
}

/// Directory-backed store with layout `<root>/<first-2-hex>/<digest>.blob`.
///
/// Writes go to a temp file and are renamed into place, so concurrent
/// writers of the same content race benignly.
pub struct DirStore {
    root: PathBuf,
    temp_counter: AtomicU64,
}

impl DirStore {
    pub fn open(root: impl Into<PathBuf>) -> Result<Self, StoreError> {
        let root = root.into();
        fs::create_dir_all(&root).map_err(|source| StoreError::Io {
            path: root.clone(),
            source,
        })?;
        Ok(Self {
            root,
            temp_counter: AtomicU64::new(0),
        })
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn blob_path(&self, hash: &ContentHash) -> PathBuf {
        let hexed = hash.to_hex();
        self.root.join(&hexed[..2]).join(format!("{hexed}.blob"))
    }

    fn io(&self, path: &Path, source: std::io::Error) -> StoreError {
        StoreError::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl BlobStore for DirStore {
    fn put(&self, payload: &[u8]) -> Result<ContentHash, StoreError> {
        if payload.is_empty() {
            return Err(StoreError::EmptyPayload);
        }
        let hash = ContentHash::of(payload);
        let path = self.blob_path(&hash);
        if path.exists() {
            return Ok(hash);
        }
        let dir = path.parent().expect("blob path has a shard directory");
        fs::create_dir_all(dir).map_err(|e| self.io(dir, e))?;
        let temp = dir.join(format!(
            ".{}.{}.{}.tmp",
            hash.to_hex(),
            std::process::id(),
            self.temp_counter.fetch_add(1, Ordering::Relaxed)
        ));
        {
            let mut file = fs::File::create(&temp).map_err(|e| self.io(&temp, e))?;
            file.write_all(payload).map_err(|e| self.io(&temp, e))?;
            file.sync_all().map_err(|e| self.io(&temp, e))?;
        }
        fs::rename(&temp, &path).map_err(|e| self.io(&path, e))?;
        Ok(hash)
    }

    fn get(&self, hash: &ContentHash) -> Result<Vec<u8>, StoreError> {
        let path = self.blob_path(hash);
        let payload = match fs::read(&path) {
            Ok(bytes) => bytes,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::NotFound(*hash))
            }
            Err(e) => return Err(self.io(&path, e)),
        };
        let actual = ContentHash::of(&payload);
        if actual != *hash {
            return Err(StoreError::Integrity {
                requested: *hash,
                actual,
            });
        }
        Ok(payload)
    }

    fn blob_count(&self) -> usize {
        let Ok(shards) = fs::read_dir(&self.root) else {
            return 0;
        };
        shards
            .flatten()
            .filter(|entry| entry.path().is_dir())
            .filter_map(|entry| fs::read_dir(entry.path()).ok())
            .flat_map(|dir| dir.flatten())
            .filter(|entry| entry.path().extension().is_some_and(|ext| ext == "blob"))
            .count()
    }
}
