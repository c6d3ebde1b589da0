//! Read and write embedding files: the binary UQEB layout and JSON lines. `read_dataset`
//! picks the format from the file contents.
//!
//! ```bash
//! cargo run --example embedding_files
//! ```

use uq_heads::data::{read_dataset, write_embedding_file, write_jsonl};
use uq_heads::prelude::*;

fn main() -> std::result::Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::temp_dir().join(format!("uq-heads-files-{}", std::process::id()));
    std::fs::create_dir_all(&dir)?;

    let x = Matrix::from_rows(&[vec![0.25, -1.0, 3.5], vec![1.0, 0.0, -0.5], vec![2.0, 2.0, 2.0]])?;
    let ds = EmbeddingDataset::new(x, Some(vec![1, 0, 1]), "hand-written rows")?;

    let bin = dir.join("rows.uqeb");
    let json = dir.join("rows.jsonl");
    write_embedding_file(&bin, &ds)?;
    write_jsonl(&json, &ds)?;

    for path in [&bin, &json] {
        let back = read_dataset(path)?;
        let size = std::fs::metadata(path)?.len();
        println!(
            "{}: {} bytes, {} rows x {} dims, labels {:?}, note {:?}",
            path.file_name().unwrap().to_string_lossy(),
            size,
            back.n(),
            back.dim(),
            back.labels(),
            back.source_note()
        );
    }
    print!("{}", std::fs::read_to_string(&json)?);

    // values round-trip through f32 in the binary file
    let back = read_dataset(&bin)?;
    println!("max |x - read(x)| = {:e}", back.embeddings().max_abs_diff(ds.embeddings()));

    std::fs::remove_dir_all(&dir)?;
    Ok(())
}
