//! Matrix CSV files and binary PGM images.

use std::io::Write;
use std::path::Path;

use rnstpu_core::{parse_rational, BigRational};

use crate::error::{Error, Result};

/// Reads a matrix of decimal or `a/b` entries, one row per line, no header.
pub fn read_matrix(path: &Path) -> Result<Vec<Vec<BigRational>>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    read_matrix_from(file, path)
}

pub fn read_matrix_from(reader: impl std::io::Read, path: &Path) -> Result<Vec<Vec<BigRational>>> {
    let csv_err = |message: String| Error::Csv { path: path.to_path_buf(), message };
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader);
    let mut rows = Vec::new();
    for (line, record) in rdr.records().enumerate() {
        let record = record.map_err(|e| match e.kind() {
            csv::ErrorKind::Io(_) => Error::io(path, std::io::Error::other(e.to_string())),
            _ => csv_err(e.to_string()),
        })?;
        let row = record
            .iter()
            .map(|field| parse_rational(field).map_err(|e| csv_err(format!("row {}: {e}", line + 1))))
            .collect::<Result<Vec<_>>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return Err(csv_err("no rows".into()));
    }
    Ok(rows)
}

pub fn write_matrix(path: &Path, rows: &[Vec<String>]) -> Result<()> {
    let mut buf = Vec::new();
    {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(&mut buf);
        for row in rows {
            w.write_record(row).map_err(|e| Error::io(path, std::io::Error::other(e.to_string())))?;
        }
        w.flush().map_err(|e| Error::io(path, e))?;
    }
    std::fs::write(path, buf).map_err(|e| Error::io(path, e))
}

/// Gray level for an escape count: `count * 255 / max_iter`.
pub fn gray(count: u32, max_iter: u32) -> u8 {
    (u64::from(count.min(max_iter)) * 255 / u64::from(max_iter.max(1))) as u8
}

pub fn encode_pgm(width: u32, height: u32, pixels: &[u8]) -> Vec<u8> {
    assert_eq!(pixels.len(), width as usize * height as usize);
    let mut out = format!("P5\n{width} {height}\n255\n").into_bytes();
    out.extend_from_slice(pixels);
    out
}

pub fn write_pgm(path: &Path, width: u32, height: u32, pixels: &[u8]) -> Result<()> {
    let bytes = encode_pgm(width, height, pixels);
    let mut f = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&bytes).map_err(|e| Error::io(path, e))
}
