//! Readers and writers for the on-disk formats: JSONL catalogs, embedding
//! tables, sampling tables, franchise lists and MovieLens-style CSV ratings.

use std::collections::BTreeSet;
use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use suber_core::eval::{Franchise, ReferenceRating};
use suber_core::retrieval::EmbeddingTable;
use suber_core::usergen::SamplingTables;
use suber_core::{Domain, ItemRecord, UserRecord};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{path}:{line}: {message}")]
    Parse {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Invalid { path: PathBuf, message: String },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DataError + '_ {
    move |source| DataError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// One record per non-blank line. Errors carry the 1-based line number.
pub fn read_jsonl<T: DeserializeOwned>(path: &Path) -> Result<Vec<T>, DataError> {
    let file = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line).map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
        out.push(record);
    }
    Ok(out)
}

pub fn jsonl_bytes<T: Serialize>(records: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in records {
        serde_json::to_writer(&mut out, r).expect("records serialize");
        out.push(b'\n');
    }
    out
}

pub fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T, DataError> {
    let text = fs::read_to_string(path).map_err(io_err(path))?;
    serde_json::from_str(&text).map_err(|e| DataError::Parse {
        path: path.to_path_buf(),
        line: e.line(),
        message: e.to_string(),
    })
}

/// Writes to a sibling temporary file and renames it over `path`.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), DataError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let name = path
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_default();
    let tmp = path.with_file_name(format!(".{name}.tmp"));
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    drop(f);
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn read_users(path: &Path) -> Result<Vec<UserRecord>, DataError> {
    let users: Vec<UserRecord> = read_jsonl(path)?;
    for (i, u) in users.iter().enumerate() {
        u.validate().map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(users)
}

pub fn read_items(path: &Path) -> Result<Vec<ItemRecord>, DataError> {
    let items: Vec<ItemRecord> = read_jsonl(path)?;
    for (i, it) in items.iter().enumerate() {
        it.validate().map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            message: e.to_string(),
        })?;
    }
    Ok(items)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingRow {
    pub item_id: u32,
    pub vector: Vec<f64>,
}

/// `{"item_id": .., "vector": [..]}` per line.
pub fn read_embeddings(path: &Path) -> Result<EmbeddingTable, DataError> {
    let rows: Vec<EmbeddingRow> = read_jsonl(path)?;
    let mut table = EmbeddingTable::new();
    for (i, row) in rows.into_iter().enumerate() {
        table
            .insert(row.item_id, row.vector)
            .map_err(|e| DataError::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                message: e.to_string(),
            })?;
    }
    Ok(table)
}

pub fn read_sampling_tables(path: &Path) -> Result<SamplingTables, DataError> {
    let tables: SamplingTables = read_json(path)?;
    tables.validate().map_err(|e| DataError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    Ok(tables)
}

pub fn read_franchises(path: &Path) -> Result<Vec<Franchise>, DataError> {
    read_json(path)
}

#[derive(Debug, Deserialize)]
struct RatingRow {
    #[serde(rename = "userId")]
    _user_id: u64,
    #[serde(rename = "movieId")]
    item_id: u32,
    rating: f64,
}

/// Converts a CSV star rating to the canonical scale: half-star movie
/// ratings double onto 1..=10, book ratings are used as is.
pub fn canonical_reference(stars: f64, domain: Domain) -> Option<u8> {
    let value = match domain {
        Domain::Movie => stars * 2.0,
        Domain::Book => stars,
    };
    let rounded = value.round();
    if (value - rounded).abs() > 1e-9 {
        return None;
    }
    let r = rounded as i64;
    let scale = domain.scale();
    (i64::from(scale.min)..=i64::from(scale.max))
        .contains(&r)
        .then_some(r as u8)
}

/// `userId,movieId,rating,timestamp` rows, header required.
pub fn read_reference_ratings(
    path: &Path,
    domain: Domain,
) -> Result<Vec<ReferenceRating>, DataError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| DataError::Invalid {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<RatingRow>().enumerate() {
        let line = i + 2;
        let row = row.map_err(|e| DataError::Parse {
            path: path.to_path_buf(),
            line,
            message: e.to_string(),
        })?;
        let rating = canonical_reference(row.rating, domain).ok_or_else(|| DataError::Parse {
            path: path.to_path_buf(),
            line,
            message: format!(
                "rating {} is not on the {} scale",
                row.rating,
                domain.as_str()
            ),
        })?;
        out.push(ReferenceRating {
            item_id: row.item_id,
            rating,
        });
    }
    Ok(out)
}

/// Checks that persona ids do not collide with catalog user ids.
pub fn check_disjoint_ids(
    users: &[UserRecord],
    personas: &[UserRecord],
    path: &Path,
) -> Result<(), DataError> {
    let ids: BTreeSet<u32> = users.iter().map(|u| u.user_id).collect();
    if let Some(p) = personas.iter().find(|p| ids.contains(&p.user_id)) {
        return Err(DataError::Invalid {
            path: path.to_path_buf(),
            message: format!("persona id {} is also a catalog user id", p.user_id),
        });
    }
    Ok(())
}
