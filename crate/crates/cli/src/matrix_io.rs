//! Whitespace-delimited text matrices with a `rows cols` header line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use rkrp_core::DenseMatrix;

use crate::error::CliError;

pub fn parse_matrix(text: &str) -> Result<DenseMatrix, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    let header = lines.next().ok_or("empty file")?;
    let dims: Vec<&str> = header.split_whitespace().collect();
    let [rows, cols] = dims[..] else {
        return Err(format!("header must be `rows cols`, got {header:?}"));
    };
    let rows: usize = rows.parse().map_err(|_| format!("bad row count {rows:?}"))?;
    let cols: usize = cols.parse().map_err(|_| format!("bad column count {cols:?}"))?;
    let data = lines
        .flat_map(str::split_whitespace)
        .map(|tok| tok.parse::<f64>().map_err(|_| format!("bad number {tok:?}")))
        .collect::<Result<Vec<f64>, String>>()?;
    if data.len() != rows * cols {
        return Err(format!("expected {} values for {rows}x{cols}, found {}", rows * cols, data.len()));
    }
    DenseMatrix::new(rows, cols, data).map_err(|e| e.to_string())
}

pub fn format_matrix(m: &DenseMatrix) -> String {
    let mut out = format!("{} {}\n", m.rows(), m.cols());
    for r in 0..m.rows() {
        let row: Vec<String> = m.row(r).iter().map(|v| format!("{v:e}")).collect();
        let _ = writeln!(out, "{}", row.join(" "));
    }
    out
}

pub fn read_matrix(path: &Path) -> Result<DenseMatrix, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
    parse_matrix(&text).map_err(|message| CliError::Parse {
        path: path.to_path_buf(),
        message,
    })
}

pub fn write_matrix(path: &Path, m: &DenseMatrix) -> Result<(), CliError> {
    fs::write(path, format_matrix(m)).map_err(|e| CliError::io(path, e))
}
