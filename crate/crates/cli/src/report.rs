//! CSV and JSON report files.
//!
//! CSV files open with a single `#` comment carrying the generation time;
//! everything after it is a function of the inputs alone.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use serde::Serialize;

use crate::error::CliError;
use crate::experiment::Row;

/// Write `rows` as CSV with a fixed header, no timestamp.
pub fn write_csv_body<W: Write>(rows: &[Row], out: W) -> Result<(), CliError> {
    let mut w = csv::WriterBuilder::new().has_headers(true).from_writer(out);
    if rows.is_empty() {
        w.write_record(CSV_HEADER).map_err(|e| CliError::Encode(e.to_string()))?;
    }
    for r in rows {
        w.serialize(r).map_err(|e| CliError::Encode(e.to_string()))?;
    }
    w.flush().map_err(|e| CliError::Encode(e.to_string()))
}

pub const CSV_HEADER: &[&str] = &[
    "workload", "strategy", "idiom", "sweep_axis", "sweep_value", "seed", "capacity_a", "capacity_b", "y", "k",
    "shape_a_rows", "shape_a_cols", "shape_b_rows", "shape_b_cols", "tiles_a", "tiles_b", "pairs",
    "first_fetches", "refetches", "parent_traffic", "refetch_overhead", "output_elements", "traffic_words",
    "effectual_multiplies", "reuse_fraction", "bumped_fraction", "overbooking_rate", "overbooking_rate_a",
    "overbooking_rate_b", "cycles", "energy", "initial_size_a", "samples_a", "qy_a", "target_size_a",
    "initial_size_b", "samples_b", "qy_b", "target_size_b",
];

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|source| CliError::Output { path: dir.to_path_buf(), source })?;
    }
    let file = File::create(path).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
    Ok(BufWriter::new(file))
}

pub fn write_csv(rows: &[Row], path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    let secs = SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0);
    writeln!(w, "# overbook {} generated at unix time {secs}", env!("CARGO_PKG_VERSION"))
        .map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
    write_csv_body(rows, &mut w)?;
    w.flush().map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value).map_err(|e| CliError::Encode(e.to_string()))?;
    writeln!(w).and_then(|_| w.flush()).map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value).map_err(|e| CliError::Encode(e.to_string()))
}

/// Write line-delimited JSON records.
pub fn write_jsonl<T: Serialize>(items: &[T], path: &Path) -> Result<(), CliError> {
    let mut w = create(path)?;
    for item in items {
        serde_json::to_writer(&mut w, item).map_err(|e| CliError::Encode(e.to_string()))?;
        writeln!(w).map_err(|source| CliError::Output { path: path.to_path_buf(), source })?;
    }
    w.flush().map_err(|source| CliError::Output { path: path.to_path_buf(), source })
}

/// `runs.csv` and `summary.json` under `dir`.
pub fn output_paths(dir: &Path) -> (PathBuf, PathBuf) {
    (dir.join("runs.csv"), dir.join("summary.json"))
}

/// The CSV text after the header comment.
pub fn csv_body(text: &str) -> &str {
    match text.strip_prefix('#') {
        Some(rest) => rest.split_once('\n').map_or("", |(_, body)| body),
        None => text,
    }
}
