//! JSON Lines file helpers shared by the pool, dataset, trace, and score
//! formats.

use crate::engine::{Item, ItemLevel};
use crate::gen::{GenError, ItemPool};
use serde::de::DeserializeOwned;
use serde::Serialize;
use std::io::{BufRead, Write};
use std::path::Path;

/// Read a JSONL file into a vector, reporting the offending line on error.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> std::io::Result<Vec<T>> {
    let file = std::fs::File::open(path)?;
    let mut out = Vec::new();
    for (lineno, line) in std::io::BufReader::new(file).lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let value: T = serde_json::from_str(&line).map_err(|e| {
            std::io::Error::new(
                std::io::ErrorKind::InvalidData,
                format!("{}:{}: {}", path.display(), lineno + 1, e),
            )
        })?;
        out.push(value);
    }
    Ok(out)
}

/// Write values as JSONL, one per line, creating parent directories.
pub fn write_jsonl<T: Serialize>(path: &Path, values: &[T]) -> std::io::Result<()> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    let file = std::fs::File::create(path)?;
    let mut out = std::io::BufWriter::new(file);
    for value in values {
        serde_json::to_writer(&mut out, value)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

/// Load a pool file (one item per line) and split it into per-level pools,
/// token first. Levels absent from the file are absent from the result.
pub fn load_pools(path: &Path) -> Result<Vec<ItemPool>, PoolLoadError> {
    let items: Vec<Item> = read_jsonl(path)?;
    let mut pools = Vec::new();
    for level in [ItemLevel::Token, ItemLevel::Paragraph] {
        let entries: Vec<Item> = items.iter().filter(|i| i.level == level).cloned().collect();
        if !entries.is_empty() {
            pools.push(ItemPool::from_entries(level, entries)?);
        }
    }
    Ok(pools)
}

#[derive(Debug, thiserror::Error)]
pub enum PoolLoadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Schema(#[from] GenError),
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::synth_pool;

    #[test]
    fn pool_files_round_trip_split_by_level() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("pool.jsonl");
        let tok = synth_pool(ItemLevel::Token, 10, 1).unwrap();
        let par = synth_pool(ItemLevel::Paragraph, 8, 1).unwrap();
        let mut all = tok.entries.clone();
        all.extend(par.entries.clone());
        write_jsonl(&path, &all).unwrap();
        let pools = load_pools(&path).unwrap();
        assert_eq!(pools.len(), 2);
        assert_eq!(pools[0].level, ItemLevel::Token);
        assert_eq!(pools[0].entries, tok.entries);
        assert_eq!(pools[1].entries, par.entries);
    }

    #[test]
    fn bad_lines_report_their_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.jsonl");
        std::fs::write(&path, "{\"id\": 1}\n").unwrap();
        let err = read_jsonl::<Item>(&path).unwrap_err();
        assert!(err.to_string().contains(":1:"), "{err}");
    }
}
