//! CSV and JSON output helpers: header row, comma delimiter, `.` decimal point, LF endings.

use std::fs;
use std::path::Path;

use serde::Serialize;

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

/// Serializes rows of numbers (or anything `Display`) to CSV bytes.
pub fn csv_bytes<R, I, T>(header: &[&str], rows: R) -> Result<Vec<u8>, TableError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    let mut wtr = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    wtr.write_record(header)?;
    for row in rows {
        wtr.write_record(row.into_iter().map(|v| v.to_string()))?;
    }
    wtr.into_inner().map_err(|e| TableError::Io(e.into_error()))
}

pub fn write_csv<R, I, T>(path: impl AsRef<Path>, header: &[&str], rows: R) -> Result<(), TableError>
where
    R: IntoIterator<Item = I>,
    I: IntoIterator<Item = T>,
    T: std::fmt::Display,
{
    fs::write(path, csv_bytes(header, rows)?)?;
    Ok(())
}

/// Pretty JSON with a trailing newline.
pub fn json_bytes<T: Serialize>(value: &T) -> Result<Vec<u8>, TableError> {
    let mut out = serde_json::to_vec_pretty(value)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_json<T: Serialize>(path: impl AsRef<Path>, value: &T) -> Result<(), TableError> {
    fs::write(path, json_bytes(value)?)?;
    Ok(())
}
