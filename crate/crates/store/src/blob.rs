//! Content-addressed attachment storage under `blobs/<hh>/<sha256 hex>`.

use std::fs::{self, File};
use std::io::Write;
use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};

use crate::{sync_dir, StoreError};

pub const MAX_BLOB_BYTES: usize = 5 << 20;

#[derive(Debug, Clone)]
pub struct BlobStore {
    dir: PathBuf,
}

pub fn hash_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl BlobStore {
    pub fn new(dir: impl Into<PathBuf>) -> Self {
        BlobStore { dir: dir.into() }
    }

    fn path(&self, hash: &str) -> Result<PathBuf, StoreError> {
        burst_core::validate_blob_ref(hash).map_err(|_| StoreError::BadBlobHash(hash.into()))?;
        Ok(self.dir.join(&hash[..2]).join(hash))
    }

    /// Stores `bytes` and returns their hex SHA-256. Storing the same
    /// content twice is a no-op.
    pub fn put(&self, bytes: &[u8]) -> Result<String, StoreError> {
        if bytes.len() > MAX_BLOB_BYTES {
            return Err(StoreError::BlobTooLarge {
                size: bytes.len(),
                max: MAX_BLOB_BYTES,
            });
        }
        let hash = hash_hex(bytes);
        let path = self.path(&hash)?;
        if path.exists() {
            return Ok(hash);
        }
        let parent = path.parent().expect("blob paths have a parent");
        fs::create_dir_all(parent)?;
        let tmp = parent.join(format!("{hash}.tmp"));
        {
            let mut f = File::create(&tmp)?;
            f.write_all(bytes)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        sync_dir(parent)?;
        Ok(hash)
    }

    /// Reads a blob back, re-checking its hash.
    pub fn get(&self, hash: &str) -> Result<Vec<u8>, StoreError> {
        let path = self.path(hash)?;
        let bytes = match fs::read(&path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => {
                return Err(StoreError::BlobNotFound(hash.into()))
            }
            Err(e) => return Err(e.into()),
        };
        if hash_hex(&bytes) != hash {
            return Err(StoreError::BlobCorrupt(hash.into()));
        }
        Ok(bytes)
    }

    pub fn contains(&self, hash: &str) -> bool {
        self.path(hash).is_ok_and(|p| p.exists())
    }

    pub fn dir(&self) -> &Path {
        &self.dir
    }
}
