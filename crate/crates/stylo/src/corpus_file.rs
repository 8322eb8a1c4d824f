//! Aggregated author documents, one JSON object per line.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use stylo_core::corpus::{ensure_unique_keys, AuthorDocument};

use crate::{Result, StyloError};

pub fn write_corpus(path: &Path, documents: &[AuthorDocument]) -> Result<()> {
    let io = |e| StyloError::io(path, e);
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    for doc in documents {
        serde_json::to_writer(&mut out, doc).expect("serializing strings cannot fail");
        out.write_all(b"\n").map_err(io)?;
    }
    out.flush().map_err(io)
}

pub fn read_corpus(path: &Path) -> Result<Vec<AuthorDocument>> {
    let file = File::open(path).map_err(|e| StyloError::io(path, e))?;
    let mut docs = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| StyloError::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: AuthorDocument = serde_json::from_str(&line).map_err(|e| StyloError::Format {
            path: path.to_path_buf(),
            message: format!("line {}: {e}", n + 1),
        })?;
        docs.push(doc);
    }
    ensure_unique_keys(&docs)?;
    Ok(docs)
}
