//! Embedding datasets: the `UQEB` binary format, JSON-lines ingestion and the seeded
//! train/validation/test split.

mod jsonl;
mod split;
mod uqeb;

use std::path::Path;

use crate::numerics::Matrix;
use crate::{Error, Result};

pub use jsonl::{read_jsonl, write_jsonl};
pub use split::{split_dataset, split_sizes, SplitIndices};
pub use uqeb::{
    dataset_from_bytes, dataset_to_bytes, read_embedding_file, write_embedding_file, UQEB_MAGIC,
    UQEB_VERSION,
};

/// Rows of fixed-width embeddings with optional binary labels.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingDataset {
    embeddings: Matrix,
    labels: Option<Vec<u8>>,
    source_note: String,
}

impl EmbeddingDataset {
    pub fn new(embeddings: Matrix, labels: Option<Vec<u8>>, source_note: impl Into<String>) -> Result<Self> {
        if let Some(l) = &labels {
            if l.len() != embeddings.rows() {
                return Err(Error::Dimension(format!(
                    "{} labels for {} rows",
                    l.len(),
                    embeddings.rows()
                )));
            }
            if let Some(i) = l.iter().position(|&y| y > 1) {
                return Err(Error::Argument(format!("label {} at row {i} is not 0 or 1", l[i])));
            }
        }
        Ok(EmbeddingDataset {
            embeddings,
            labels,
            source_note: source_note.into(),
        })
    }

    /// Builds a dataset from raw values that may still contain non-finite entries.
    pub(crate) fn from_raw(
        n: usize,
        dim: usize,
        values: Vec<f64>,
        labels: Option<Vec<u8>>,
        source_note: String,
    ) -> Result<Self> {
        EmbeddingDataset::new(Matrix::from_vec_unchecked(n, dim, values), labels, source_note)
    }

    pub fn n(&self) -> usize {
        self.embeddings.rows()
    }

    pub fn dim(&self) -> usize {
        self.embeddings.cols()
    }

    pub fn embeddings(&self) -> &Matrix {
        &self.embeddings
    }

    pub fn labels(&self) -> Option<&[u8]> {
        self.labels.as_deref()
    }

    pub fn source_note(&self) -> &str {
        &self.source_note
    }

    /// Rejects datasets holding NaN or infinite embedding values.
    pub fn check_finite(&self) -> Result<()> {
        let dim = self.dim().max(1);
        match self.embeddings.as_slice().iter().position(|v| !v.is_finite()) {
            None => Ok(()),
            Some(pos) => Err(Error::NonFinite(format!(
                "embedding row {}, column {} is {}",
                pos / dim,
                pos % dim,
                self.embeddings.as_slice()[pos]
            ))),
        }
    }

    /// Fraction of positive labels, if labeled and non-empty.
    pub fn positive_fraction(&self) -> Option<f64> {
        let l = self.labels.as_ref()?;
        (!l.is_empty()).then(|| l.iter().map(|&y| y as f64).sum::<f64>() / l.len() as f64)
    }
}

/// Reads a dataset in either supported format, choosing by content: files starting with the
/// `UQEB` magic are binary, anything else is parsed as JSON lines.
pub fn read_dataset(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.starts_with(UQEB_MAGIC) {
        dataset_from_bytes(&bytes, path)
    } else if bytes.iter().find(|b| !b.is_ascii_whitespace()) == Some(&b'{') {
        jsonl::parse_jsonl(&bytes, path)
    } else {
        Err(Error::format(path, "neither a UQEB file nor JSON lines"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn label_validation() {
        let m = Matrix::zeros(2, 3);
        assert!(EmbeddingDataset::new(m.clone(), Some(vec![0, 1]), "").is_ok());
        assert!(EmbeddingDataset::new(m.clone(), Some(vec![0]), "").is_err());
        assert!(EmbeddingDataset::new(m, Some(vec![0, 2]), "").is_err());
    }

    #[test]
    fn finite_check_names_the_row() {
        let ds = EmbeddingDataset::from_raw(2, 2, vec![0.0, 1.0, f64::NAN, 2.0], None, String::new()).unwrap();
        let err = ds.check_finite().unwrap_err();
        assert!(matches!(err, Error::NonFinite(ref m) if m.contains("row 1")));
    }
}
