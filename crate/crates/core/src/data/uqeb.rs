//! `UQEB` embedding files.
//!
//! ```text
//! magic           4 bytes "UQEB"
//! version         u32 = 1
//! n               u64
//! dim             u32
//! labels present  u8 (0 or 1)
//! source note     u32 length + UTF-8 bytes
//! embeddings      n·dim f32, row-major
//! labels          n bytes, only when present
//! ```
//!
//! Little-endian throughout. Values are stored as `f32` and widened to `f64` on read.

use std::path::Path;

use super::EmbeddingDataset;
use crate::{Error, Result};

pub const UQEB_MAGIC: &[u8; 4] = b"UQEB";
pub const UQEB_VERSION: u32 = 1;

pub fn dataset_to_bytes(ds: &EmbeddingDataset) -> Vec<u8> {
    let note = ds.source_note().as_bytes();
    let labels = ds.labels();
    let mut out = Vec::with_capacity(25 + note.len() + 4 * ds.n() * ds.dim() + ds.n());
    out.extend_from_slice(UQEB_MAGIC);
    out.extend_from_slice(&UQEB_VERSION.to_le_bytes());
    out.extend_from_slice(&(ds.n() as u64).to_le_bytes());
    out.extend_from_slice(&(ds.dim() as u32).to_le_bytes());
    out.push(u8::from(labels.is_some()));
    out.extend_from_slice(&(note.len() as u32).to_le_bytes());
    out.extend_from_slice(note);
    for &v in ds.embeddings().as_slice() {
        out.extend_from_slice(&(v as f32).to_le_bytes());
    }
    if let Some(l) = labels {
        out.extend_from_slice(l);
    }
    out
}

pub fn write_embedding_file(path: impl AsRef<Path>, ds: &EmbeddingDataset) -> Result<()> {
    let path = path.as_ref();
    if ds.dim() > u32::MAX as usize {
        return Err(Error::Argument(format!("dimension {} does not fit the format", ds.dim())));
    }
    std::fs::write(path, dataset_to_bytes(ds)).map_err(|e| Error::io(path, e))
}

pub fn read_embedding_file(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    dataset_from_bytes(&bytes, path)
}

/// Decodes a `UQEB` buffer; `path` only labels errors. Nothing partial is returned.
pub fn dataset_from_bytes(buf: &[u8], path: &Path) -> Result<EmbeddingDataset> {
    const FIXED: usize = 4 + 4 + 8 + 4 + 1 + 4;
    if buf.len() < 4 || &buf[..4] != UQEB_MAGIC {
        return Err(Error::format(path, "bad magic (expected \"UQEB\")"));
    }
    if buf.len() < FIXED {
        return Err(Error::format(
            path,
            format!("truncated header: expected at least {FIXED} bytes, found {}", buf.len()),
        ));
    }
    let u32_at = |o: usize| u32::from_le_bytes(buf[o..o + 4].try_into().unwrap());
    let version = u32_at(4);
    if version != UQEB_VERSION {
        return Err(Error::Version {
            path: path.into(),
            found: version,
            expected: UQEB_VERSION,
        });
    }
    let n = u64::from_le_bytes(buf[8..16].try_into().unwrap());
    let dim = u32_at(16) as u64;
    let has_labels = match buf[20] {
        0 => false,
        1 => true,
        b => return Err(Error::format(path, format!("labels-present byte is {b}, expected 0 or 1"))),
    };
    let note_len = u32_at(21) as u64;

    let expected = (FIXED as u64)
        .checked_add(note_len)
        .and_then(|h| n.checked_mul(dim)?.checked_mul(4)?.checked_add(h))
        .and_then(|t| t.checked_add(if has_labels { n } else { 0 }))
        .ok_or_else(|| Error::format(path, "header sizes overflow"))?;
    if buf.len() as u64 != expected {
        let what = if (buf.len() as u64) < expected { "truncated payload" } else { "trailing bytes" };
        return Err(Error::format(
            path,
            format!("{what}: expected {expected} bytes, found {}", buf.len()),
        ));
    }
    let (n, dim, note_len) = (n as usize, dim as usize, note_len as usize);
    let note_end = FIXED + note_len;
    let note = std::str::from_utf8(&buf[FIXED..note_end])
        .map_err(|_| Error::format(path, "source note is not UTF-8"))?
        .to_owned();
    let emb_end = note_end + 4 * n * dim;
    let values: Vec<f64> = buf[note_end..emb_end]
        .chunks_exact(4)
        .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
        .collect();
    let labels = if has_labels {
        let l = buf[emb_end..].to_vec();
        if let Some(i) = l.iter().position(|&y| y > 1) {
            return Err(Error::format(path, format!("label byte {} at row {i}", l[i])));
        }
        Some(l)
    } else {
        None
    };
    EmbeddingDataset::from_raw(n, dim, values, labels, note)
}
