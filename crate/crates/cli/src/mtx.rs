//! Matrix Market (`.mtx`) reading and writing.
//!
//! Coordinate and array formats with real, integer or pattern fields.
//! Symmetric and skew-symmetric files are expanded to both triangles.
//! Explicit zeros in coordinate files are kept as structural nonzeros.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use overbook_core::SparseMatrix;

use crate::error::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Coordinate,
    Array,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Field {
    Real,
    Integer,
    Pattern,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Symmetry {
    General,
    Symmetric,
    SkewSymmetric,
}

fn parse_header(line: &str) -> Result<(Format, Field, Symmetry), String> {
    let words: Vec<String> = line.split_whitespace().map(str::to_ascii_lowercase).collect();
    if words.len() != 5 || words[0] != "%%matrixmarket" || words[1] != "matrix" {
        return Err(format!("bad banner line: {line:?}"));
    }
    let format = match words[2].as_str() {
        "coordinate" => Format::Coordinate,
        "array" => Format::Array,
        other => return Err(format!("unsupported format {other:?}")),
    };
    let field = match words[3].as_str() {
        "real" | "double" => Field::Real,
        "integer" => Field::Integer,
        "pattern" => Field::Pattern,
        other => return Err(format!("unsupported field {other:?}")),
    };
    let symmetry = match words[4].as_str() {
        "general" => Symmetry::General,
        "symmetric" => Symmetry::Symmetric,
        "skew-symmetric" => Symmetry::SkewSymmetric,
        other => return Err(format!("unsupported symmetry {other:?}")),
    };
    if field == Field::Pattern && format == Format::Array {
        return Err("pattern field requires coordinate format".into());
    }
    Ok((format, field, symmetry))
}

fn parse_usize(tok: Option<&str>, what: &str) -> Result<usize, String> {
    tok.ok_or_else(|| format!("missing {what}"))?.parse().map_err(|_| format!("bad {what}"))
}

fn parse_value(tok: Option<&str>) -> Result<f64, String> {
    tok.ok_or("missing value")?.parse().map_err(|_| "bad value".to_string())
}

/// Parse Matrix Market text from any reader. `name` labels diagnostics.
pub fn read_mtx_from<R: BufRead>(reader: R, name: &str) -> Result<SparseMatrix, CliError> {
    let bad = |line: usize, why: String| CliError::MatrixMarket { path: name.to_string(), line, why };
    let mut lines = reader.lines().enumerate();
    let (_, banner) = lines.next().ok_or_else(|| bad(1, "empty file".into()))?;
    let banner = banner.map_err(|e| bad(1, e.to_string()))?;
    let (format, field, symmetry) = parse_header(&banner).map_err(|why| bad(1, why))?;

    let mut size_line = None;
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();
    let mut dims = (0, 0, 0);
    let mut array_pos = 0usize;
    for (i, line) in lines {
        let lineno = i + 1;
        let line = line.map_err(|e| bad(lineno, e.to_string()))?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('%') {
            continue;
        }
        let mut toks = line.split_whitespace();
        if size_line.is_none() {
            let rows = parse_usize(toks.next(), "row count").map_err(|w| bad(lineno, w))?;
            let cols = parse_usize(toks.next(), "column count").map_err(|w| bad(lineno, w))?;
            let nnz = match format {
                Format::Coordinate => parse_usize(toks.next(), "entry count").map_err(|w| bad(lineno, w))?,
                Format::Array => rows * cols,
            };
            dims = (rows, cols, nnz);
            size_line = Some(lineno);
            entries.reserve(nnz);
            continue;
        }
        let (rows, cols, _) = dims;
        let (r, c, v) = match format {
            Format::Coordinate => {
                let r = parse_usize(toks.next(), "row index").map_err(|w| bad(lineno, w))?;
                let c = parse_usize(toks.next(), "column index").map_err(|w| bad(lineno, w))?;
                if r == 0 || c == 0 || r > rows || c > cols {
                    return Err(bad(lineno, format!("index ({r}, {c}) outside {rows}x{cols}")));
                }
                let v = match field {
                    Field::Pattern => 1.0,
                    _ => parse_value(toks.next()).map_err(|w| bad(lineno, w))?,
                };
                (r - 1, c - 1, v)
            }
            Format::Array => {
                // column-major; symmetric arrays store the lower triangle only
                let (r, c) = loop {
                    let (r, c) = (array_pos % rows.max(1), array_pos / rows.max(1));
                    array_pos += 1;
                    let stored = match symmetry {
                        Symmetry::General => true,
                        Symmetry::Symmetric => r >= c,
                        Symmetry::SkewSymmetric => r > c,
                    };
                    if stored || c >= cols {
                        break (r, c);
                    }
                };
                if c >= cols {
                    return Err(bad(lineno, "more array values than the matrix holds".into()));
                }
                let v = parse_value(toks.next()).map_err(|w| bad(lineno, w))?;
                if v == 0.0 {
                    continue;
                }
                (r, c, v)
            }
        };
        if field == Field::Integer && v.fract() != 0.0 {
            return Err(bad(lineno, "non-integer value in integer matrix".into()));
        }
        entries.push((r, c, v));
        match symmetry {
            Symmetry::General => {}
            Symmetry::Symmetric if r != c => entries.push((c, r, v)),
            Symmetry::SkewSymmetric if r != c => entries.push((c, r, -v)),
            Symmetry::SkewSymmetric => return Err(bad(lineno, "diagonal entry in skew-symmetric matrix".into())),
            Symmetry::Symmetric => {}
        }
    }
    let Some(size_lineno) = size_line else {
        return Err(bad(1, "missing size line".into()));
    };
    let (rows, cols, nnz) = dims;
    if format == Format::Coordinate {
        let stored = match symmetry {
            Symmetry::General => entries.len(),
            _ => entries.iter().filter(|(r, c, _)| r >= c).count(),
        };
        if stored != nnz {
            return Err(bad(size_lineno, format!("header declares {nnz} entries but {stored} were read")));
        }
    }
    let m = SparseMatrix::from_triplets(rows, cols, entries)
        .map_err(|e| bad(size_lineno, e.to_string()))?;
    Ok(if field == Field::Pattern { m.pattern() } else { m })
}

pub fn read_mtx(path: &Path) -> Result<SparseMatrix, CliError> {
    let file = File::open(path).map_err(|source| CliError::Io { path: path.to_path_buf(), source })?;
    read_mtx_from(BufReader::new(file), &path.display().to_string())
}

/// Write `m` as a general coordinate file; pattern-only when it has no values.
pub fn write_mtx<W: Write>(m: &SparseMatrix, mut out: W) -> std::io::Result<()> {
    let field = if m.values().is_some() { "real" } else { "pattern" };
    writeln!(out, "%%MatrixMarket matrix coordinate {field} general")?;
    writeln!(out, "{} {} {}", m.rows(), m.cols(), m.nnz())?;
    let values = m.values();
    for (i, (r, c)) in m.coords().enumerate() {
        match values {
            Some(v) => writeln!(out, "{} {} {}", r + 1, c + 1, v[i])?,
            None => writeln!(out, "{} {}", r + 1, c + 1)?,
        }
    }
    Ok(())
}

pub fn write_mtx_file(m: &SparseMatrix, path: &Path) -> Result<(), CliError> {
    let io = |source| CliError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    let mut w = BufWriter::new(file);
    write_mtx(m, &mut w).map_err(io)?;
    w.flush().map_err(io)
}
