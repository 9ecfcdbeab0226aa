//! Embedding cache with an optional append-only file behind it.
//!
//! File layout (all integers little-endian):
//!
//! ```text
//! header:  b"KGRAGEMB" | version: u32 | model_len: u32 | model: utf8 | dim: u32
//! record:  text_hash: u64 | dim x f32
//! ```
//!
//! `text_hash` is the first 8 bytes of SHA-256 over the UTF-8 text.

use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::{Mutex, RwLock};

use sha2::{Digest, Sha256};

use super::{Embedding, EmbeddingError, Fingerprint};

const MAGIC: &[u8; 8] = b"KGRAGEMB";
const VERSION: u32 = 1;

pub(crate) fn text_hash(text: &str) -> u64 {
    let digest = Sha256::digest(text.as_bytes());
    u64::from_le_bytes(digest[..8].try_into().expect("sha256 has 32 bytes"))
}

pub struct EmbeddingCache {
    fingerprint: Fingerprint,
    map: RwLock<HashMap<u64, Embedding>>,
    writer: Option<Mutex<BufWriter<File>>>,
}

impl std::fmt::Debug for EmbeddingCache {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("EmbeddingCache")
            .field("fingerprint", &self.fingerprint)
            .field("len", &self.len())
            .field("persistent", &self.writer.is_some())
            .finish()
    }
}

fn read_u32(r: &mut impl Read) -> std::io::Result<u32> {
    let mut b = [0u8; 4];
    r.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn write_header(w: &mut impl Write, fp: &Fingerprint) -> std::io::Result<()> {
    w.write_all(MAGIC)?;
    w.write_all(&VERSION.to_le_bytes())?;
    w.write_all(&(fp.model.len() as u32).to_le_bytes())?;
    w.write_all(fp.model.as_bytes())?;
    w.write_all(&(fp.dim as u32).to_le_bytes())?;
    Ok(())
}

fn read_header(r: &mut impl Read) -> Result<Fingerprint, EmbeddingError> {
    let bad = |what: &str| EmbeddingError::Cache(format!("bad header: {what}"));
    let mut magic = [0u8; 8];
    r.read_exact(&mut magic).map_err(|_| bad("truncated"))?;
    if &magic != MAGIC {
        return Err(bad("magic"));
    }
    let version = read_u32(r).map_err(|_| bad("truncated"))?;
    if version != VERSION {
        return Err(bad(&format!("unsupported version {version}")));
    }
    let len = read_u32(r).map_err(|_| bad("truncated"))? as usize;
    let mut model = vec![0u8; len];
    r.read_exact(&mut model).map_err(|_| bad("truncated"))?;
    let model = String::from_utf8(model).map_err(|_| bad("model name is not utf-8"))?;
    let dim = read_u32(r).map_err(|_| bad("truncated"))? as usize;
    Ok(Fingerprint { model, dim })
}

impl EmbeddingCache {
    pub fn in_memory(fingerprint: Fingerprint) -> Self {
        Self {
            fingerprint,
            map: RwLock::new(HashMap::new()),
            writer: None,
        }
    }

    /// Opens (or creates) a cache file. An existing file written for another
    /// fingerprint is refused. A torn trailing record is ignored.
    pub fn open(path: impl AsRef<Path>, fingerprint: Fingerprint) -> Result<Self, EmbeddingError> {
        let path = path.as_ref();
        let mut map = HashMap::new();
        let file_len = if path.exists() { std::fs::metadata(path)?.len() } else { 0 };
        let exists = file_len > 0;
        let mut valid_len = 0u64;
        if exists {
            let mut r = BufReader::new(File::open(path)?);
            let found = read_header(&mut r)?;
            if found != fingerprint {
                return Err(EmbeddingError::DimensionMismatch(format!(
                    "cache file {} holds {found}, expected {fingerprint}",
                    path.display()
                )));
            }
            let header_len = (8 + 4 + 4 + fingerprint.model.len() + 4) as u64;
            let mut record = vec![0u8; 8 + 4 * fingerprint.dim];
            let mut records = 0u64;
            loop {
                match r.read_exact(&mut record) {
                    Ok(()) => {}
                    Err(e) if e.kind() == std::io::ErrorKind::UnexpectedEof => break,
                    Err(e) => return Err(e.into()),
                }
                let key = u64::from_le_bytes(record[..8].try_into().unwrap());
                let v: Vec<f32> = record[8..]
                    .chunks_exact(4)
                    .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                    .collect();
                map.insert(key, Embedding::from(v));
                records += 1;
            }
            valid_len = header_len + records * record.len() as u64;
        }
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        if exists && valid_len < file_len {
            tracing::warn!(path = %path.display(), "dropping torn record at end of embedding cache");
            file.set_len(valid_len)?;
        }
        let mut writer = BufWriter::new(file);
        if !exists {
            write_header(&mut writer, &fingerprint)?;
            writer.flush()?;
        }
        tracing::debug!(path = %path.display(), entries = map.len(), "opened embedding cache");
        Ok(Self {
            fingerprint,
            map: RwLock::new(map),
            writer: Some(Mutex::new(writer)),
        })
    }

    pub fn fingerprint(&self) -> &Fingerprint {
        &self.fingerprint
    }

    pub fn len(&self) -> usize {
        self.map.read().expect("cache lock").len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn get(&self, text: &str) -> Option<Embedding> {
        self.map.read().expect("cache lock").get(&text_hash(text)).cloned()
    }

    /// Stores a vector; an existing entry for the same text is kept.
    pub fn insert(&self, text: &str, vector: Embedding) -> Result<(), EmbeddingError> {
        if vector.len() != self.fingerprint.dim {
            return Err(EmbeddingError::DimensionMismatch(format!(
                "vector has {} dims, cache expects {}",
                vector.len(),
                self.fingerprint.dim
            )));
        }
        let key = text_hash(text);
        {
            let mut map = self.map.write().expect("cache lock");
            if map.contains_key(&key) {
                return Ok(());
            }
            map.insert(key, vector.clone());
        }
        if let Some(w) = &self.writer {
            let mut w = w.lock().expect("cache writer lock");
            w.write_all(&key.to_le_bytes())?;
            for x in vector.iter() {
                w.write_all(&x.to_le_bytes())?;
            }
        }
        Ok(())
    }

    pub fn flush(&self) -> Result<(), EmbeddingError> {
        if let Some(w) = &self.writer {
            w.lock().expect("cache writer lock").flush()?;
        }
        Ok(())
    }
}

impl Drop for EmbeddingCache {
    fn drop(&mut self) {
        if let Err(e) = self.flush() {
            tracing::warn!(error = %e, "failed to flush embedding cache");
        }
    }
}
