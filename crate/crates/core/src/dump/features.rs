//! Line-delimited JSON persistence for pooled feature vectors.

use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::divergence::{Pooling, Scope};
use crate::error::{io_at, Error, Result};

/// One example's pooled features plus its correctness label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureRecord {
    pub example_id: String,
    /// Required key; `null` marks an unlabeled example.
    #[serde(deserialize_with = "Option::deserialize")]
    pub label: Option<u8>,
    pub scope: Scope,
    pub pooling: Pooling,
    pub features: Vec<f64>,
}

fn write_records<W: Write>(mut w: W, records: &[FeatureRecord], mut width: Option<usize>) -> Result<()> {
    for rec in records {
        check_width(&mut width, rec, None)?;
        serde_json::to_writer(&mut w, rec)?;
        w.write_all(b"\n")?;
    }
    w.flush()?;
    Ok(())
}

fn check_width(width: &mut Option<usize>, rec: &FeatureRecord, line: Option<usize>) -> Result<()> {
    match *width {
        Some(w) if w != rec.features.len() => {
            let at = line.map(|l| format!(" (line {l})")).unwrap_or_default();
            Err(Error::Schema(format!(
                "record {}{at} has {} features, expected {w}",
                rec.example_id,
                rec.features.len()
            )))
        }
        Some(_) => Ok(()),
        None => {
            *width = Some(rec.features.len());
            Ok(())
        }
    }
}

/// Writes `records` to a fresh file, one JSON object per line.
pub fn write_features(records: &[FeatureRecord], path: impl AsRef<Path>) -> Result<()> {
    write_records(BufWriter::new(File::create(path.as_ref()).map_err(io_at(path.as_ref()))?), records, None)
}

/// Appends to an existing feature file, checking the feature length against it.
pub fn append_features(records: &[FeatureRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let width = if path.exists() {
        read_features(path)?.first().map(|r| r.features.len())
    } else {
        None
    };
    let file = OpenOptions::new().create(true).append(true).open(path).map_err(io_at(path))?;
    write_records(BufWriter::new(file), records, width)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<Vec<FeatureRecord>> {
    let reader = BufReader::new(File::open(path.as_ref()).map_err(io_at(path.as_ref()))?);
    let mut out = Vec::new();
    let mut width = None;
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: FeatureRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Schema(format!("line {}: {e}", i + 1)))?;
        check_width(&mut width, &rec, Some(i + 1))?;
        out.push(rec);
    }
    Ok(out)
}
