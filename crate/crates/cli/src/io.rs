//! Matrix and label file formats.
//!
//! * CSV: one row per coordinate, one column per point; an optional first
//!   row that does not parse as numbers is taken as a header.
//! * Binary: `rows: u64 LE`, `cols: u64 LE`, then `rows * cols` `f64 LE`
//!   values in column-major order (each point contiguous).
//! * Labels: one nonnegative integer per line; blank lines are ignored.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use ssc_omp::nalgebra::DMatrix;

use crate::error::{CliError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MatrixFormat {
    Csv,
    Binary,
}

impl MatrixFormat {
    /// `.bin` selects the binary format, anything else CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some("bin") => Self::Binary,
            _ => Self::Csv,
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|e| CliError::io(path, e))
}

pub fn read_matrix(path: &Path, format: MatrixFormat) -> Result<DMatrix<f64>> {
    match format {
        MatrixFormat::Csv => read_csv_matrix(path),
        MatrixFormat::Binary => read_binary_matrix(path),
    }
}

pub fn read_csv_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .trim(csv::Trim::All)
        .from_reader(BufReader::new(open(path)?));
    let mut rows: Vec<Vec<f64>> = Vec::new();
    let mut record = csv::StringRecord::new();
    let mut first = true;
    loop {
        let more = reader.read_record(&mut record).map_err(|e| CliError::parse(path, e.to_string()))?;
        if !more {
            break;
        }
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, usize> = record
            .iter()
            .enumerate()
            .map(|(c, f)| f.parse::<f64>().ok().filter(|v| v.is_finite()).ok_or(c))
            .collect();
        match parsed {
            Ok(row) => {
                if let Some(prev) = rows.first() {
                    if prev.len() != row.len() {
                        return Err(CliError::parse(
                            path,
                            format!("line {line}: expected {} fields, found {}", prev.len(), row.len()),
                        ));
                    }
                }
                rows.push(row);
            }
            Err(_) if first => {}
            Err(c) => {
                return Err(CliError::parse(
                    path,
                    format!("line {line}, field {}: not a finite number: {:?}", c + 1, &record[c]),
                ))
            }
        }
        first = false;
    }
    if rows.is_empty() {
        return Err(CliError::parse(path, "no numeric rows"));
    }
    let (r, c) = (rows.len(), rows[0].len());
    Ok(DMatrix::from_fn(r, c, |i, j| rows[i][j]))
}

pub fn read_binary_matrix(path: &Path) -> Result<DMatrix<f64>> {
    let mut bytes = Vec::new();
    open(path)?.read_to_end(&mut bytes).map_err(|e| CliError::io(path, e))?;
    if bytes.len() < 16 {
        return Err(CliError::parse(path, format!("offset 0: header needs 16 bytes, file has {}", bytes.len())));
    }
    let word = |o: usize| u64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (rows, cols) = (word(0) as usize, word(8) as usize);
    let expected = rows
        .checked_mul(cols)
        .and_then(|n| n.checked_mul(8))
        .and_then(|n| n.checked_add(16))
        .ok_or_else(|| CliError::parse(path, "offset 0: matrix size overflows"))?;
    if bytes.len() != expected {
        return Err(CliError::parse(
            path,
            format!("offset 16: {rows}x{cols} matrix needs {expected} bytes, file has {}", bytes.len()),
        ));
    }
    let mut values = Vec::with_capacity(rows * cols);
    for (k, chunk) in bytes[16..].chunks_exact(8).enumerate() {
        let v = f64::from_le_bytes(chunk.try_into().unwrap());
        if !v.is_finite() {
            return Err(CliError::parse(path, format!("offset {}: non-finite value", 16 + 8 * k)));
        }
        values.push(v);
    }
    Ok(DMatrix::from_vec(rows, cols, values))
}

pub fn write_binary_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let file = File::create(path).map_err(|e| CliError::io(path, e))?;
    let mut w = BufWriter::new(file);
    let mut put = |b: &[u8]| w.write_all(b).map_err(|e| CliError::io(path, e));
    put(&(m.nrows() as u64).to_le_bytes())?;
    put(&(m.ncols() as u64).to_le_bytes())?;
    for v in m.iter() {
        put(&v.to_le_bytes())?;
    }
    w.flush().map_err(|e| CliError::io(path, e))
}

pub fn write_csv_matrix(path: &Path, m: &DMatrix<f64>) -> Result<()> {
    let mut text = String::new();
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format!("{:e}", m[(i, j)])).collect();
        text.push_str(&row.join(","));
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>> {
    let reader = BufReader::new(open(path)?);
    let mut labels = Vec::new();
    for (k, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| CliError::io(path, e))?;
        let t = line.trim();
        if t.is_empty() {
            continue;
        }
        let v = t
            .parse::<usize>()
            .map_err(|_| CliError::parse(path, format!("line {}: not a nonnegative integer: {t:?}", k + 1)))?;
        labels.push(v);
    }
    Ok(labels)
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<()> {
    let mut text = String::with_capacity(labels.len() * 2);
    for l in labels {
        text.push_str(&l.to_string());
        text.push('\n');
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_with_and_without_header() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "a,b,c\n1,0,0.5\n0,1,0.5\n").unwrap();
        let m = read_csv_matrix(&p).unwrap();
        assert_eq!(m, DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.5, 0.0, 1.0, 0.5]));
        std::fs::write(&p, "1, 2\n3, 4\n").unwrap();
        assert_eq!(read_csv_matrix(&p).unwrap(), DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]));
    }

    #[test]
    fn csv_errors_name_the_line() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.csv");
        std::fs::write(&p, "1,2\n3,x\n").unwrap();
        let e = read_csv_matrix(&p).unwrap_err().to_string();
        assert!(e.contains("line 2"), "{e}");
        std::fs::write(&p, "1,2\n3\n").unwrap();
        assert!(read_csv_matrix(&p).is_err());
    }

    #[test]
    fn binary_round_trip_and_truncation() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.bin");
        let m = DMatrix::from_fn(3, 4, |i, j| (i * 10 + j) as f64 - 0.5);
        write_binary_matrix(&p, &m).unwrap();
        assert_eq!(read_binary_matrix(&p).unwrap(), m);
        let bytes = std::fs::read(&p).unwrap();
        std::fs::write(&p, &bytes[..bytes.len() - 3]).unwrap();
        assert!(matches!(read_binary_matrix(&p), Err(CliError::Parse { .. })));
    }

    #[test]
    fn labels_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("l.txt");
        write_labels(&p, &[0, 2, 1]).unwrap();
        assert_eq!(read_labels(&p).unwrap(), vec![0, 2, 1]);
        std::fs::write(&p, "0\n-1\n").unwrap();
        assert!(read_labels(&p).unwrap_err().to_string().contains("line 2"));
    }
}
