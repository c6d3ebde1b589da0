use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::EmbeddingDataset;
use crate::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    embedding: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    label: Option<u8>,
}

/// Reads `{"embedding": [...], "label": 0}` lines. Labels must be present on every row or
/// on none.
pub fn read_jsonl(path: impl AsRef<Path>) -> Result<EmbeddingDataset> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_jsonl(&bytes, path)
}

pub(crate) fn parse_jsonl(bytes: &[u8], path: &Path) -> Result<EmbeddingDataset> {
    let text = std::str::from_utf8(bytes).map_err(|_| Error::format(path, "not UTF-8"))?;
    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut dim = None;
    let mut n = 0;
    for (lineno, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let row: Row = serde_json::from_str(line)
            .map_err(|e| Error::format(path, format!("line {}: {e}", lineno + 1)))?;
        match dim {
            None => dim = Some(row.embedding.len()),
            Some(d) if d != row.embedding.len() => {
                return Err(Error::format(
                    path,
                    format!("line {}: width {} differs from {d}", lineno + 1, row.embedding.len()),
                ))
            }
            _ => {}
        }
        if let Some(y) = row.label {
            if y > 1 {
                return Err(Error::format(path, format!("line {}: label {y} is not binary", lineno + 1)));
            }
        }
        values.extend(row.embedding);
        labels.push(row.label);
        n += 1;
    }
    let labels = if labels.iter().all(Option::is_some) && n > 0 {
        Some(labels.into_iter().map(Option::unwrap).collect())
    } else if labels.iter().all(Option::is_none) {
        None
    } else {
        return Err(Error::format(path, "labels present on some rows but not all"));
    };
    let note = format!("jsonl:{}", path.file_name().and_then(|s| s.to_str()).unwrap_or(""));
    EmbeddingDataset::from_raw(n, dim.unwrap_or(0), values, labels, note)
}

pub fn write_jsonl(path: impl AsRef<Path>, ds: &EmbeddingDataset) -> Result<()> {
    let path = path.as_ref();
    let mut out = Vec::new();
    for i in 0..ds.n() {
        let row = Row {
            embedding: ds.embeddings().row(i).to_vec(),
            label: ds.labels().map(|l| l[i]),
        };
        serde_json::to_writer(&mut out, &row)?;
        out.push(b'\n');
    }
    std::fs::File::create(path)
        .and_then(|mut f| f.write_all(&out))
        .map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_rows() {
        let text = b"{\"embedding\":[0.5,1.0],\"label\":1}\n\n{\"embedding\":[-1,2],\"label\":0}\n";
        let ds = parse_jsonl(text, Path::new("a.jsonl")).unwrap();
        assert_eq!(ds.n(), 2);
        assert_eq!(ds.dim(), 2);
        assert_eq!(ds.labels(), Some(&[1u8, 0][..]));
        assert_eq!(ds.embeddings().row(1), &[-1.0, 2.0]);
    }

    #[test]
    fn rejects_ragged_and_mixed() {
        let ragged = b"{\"embedding\":[0.5,1.0]}\n{\"embedding\":[1.0]}\n";
        assert!(parse_jsonl(ragged, Path::new("a")).is_err());
        let mixed = b"{\"embedding\":[0.5],\"label\":1}\n{\"embedding\":[1.0]}\n";
        assert!(parse_jsonl(mixed, Path::new("a")).is_err());
        let bad_label = b"{\"embedding\":[0.5],\"label\":3}\n";
        assert!(parse_jsonl(bad_label, Path::new("a")).is_err());
    }
}
