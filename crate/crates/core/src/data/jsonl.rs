use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{DataError, Dataset, Instance};
use crate::fsutil;

/// Writes one JSON record per line, atomically.
pub fn write_jsonl<T: Serialize>(path: &Path, records: &[T]) -> Result<usize, DataError> {
    let mut buf = Vec::new();
    for record in records {
        serde_json::to_writer(&mut buf, record)?;
        buf.write_all(b"\n")?;
    }
    fsutil::write_atomic(path, &buf)?;
    Ok(records.len())
}

pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DataError> {
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => DataError::MissingFile(path.to_path_buf()),
        _ => DataError::Io(e),
    })?;
    let mut out = Vec::new();
    for (row, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DataError::MalformedRow {
            row,
            reason: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

/// Writes a dataset in the canonical line-delimited format.
pub fn write_dataset(path: &Path, dataset: &Dataset) -> Result<usize, DataError> {
    write_jsonl(path, dataset.instances())
}

/// Reads a canonical dataset file written by [`write_dataset`].
pub fn read_dataset(path: &Path, name: &str) -> Result<Dataset, DataError> {
    let instances: Vec<Instance> = read_jsonl(path)?;
    Dataset::from_instances(name, instances)
}
