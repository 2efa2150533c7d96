//! Text CSV serialization of matrices and vectors.
//!
//! Format: a header row `rows,cols`, then one row per matrix row with
//! comma-separated values printed at 17 significant digits, which
//! round-trips every finite f64 bit-exactly.

use anyhow::{bail, Context, Result};
use ndarray::{Array1, Array2};
use std::fmt::Write as _;
use std::path::Path;

pub fn format_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn matrix_to_csv(a: &Array2<f64>) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "{},{}", a.nrows(), a.ncols());
    for row in a.rows() {
        let mut first = true;
        for v in row {
            if !first {
                out.push(',');
            }
            out.push_str(&format_f64(*v));
            first = false;
        }
        out.push('\n');
    }
    out
}

pub fn write_matrix(path: &Path, a: &Array2<f64>) -> Result<()> {
    std::fs::write(path, matrix_to_csv(a))
        .with_context(|| format!("writing matrix to {}", path.display()))
}

pub fn write_vector(path: &Path, v: &Array1<f64>) -> Result<()> {
    let col = Array2::from_shape_vec((v.len(), 1), v.to_vec())?;
    write_matrix(path, &col)
}

pub fn read_matrix(path: &Path) -> Result<Array2<f64>> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading matrix from {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().context("empty matrix file")?;
    let (r, c) = header
        .split_once(',')
        .context("matrix header must be rows,cols")?;
    let rows: usize = r.trim().parse().context("bad row count")?;
    let cols: usize = c.trim().parse().context("bad column count")?;
    let mut data = Vec::with_capacity(rows * cols);
    for (i, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parsed: std::result::Result<Vec<f64>, _> =
            line.split(',').map(|t| t.trim().parse::<f64>()).collect();
        let row = parsed.with_context(|| format!("bad value on data row {i}"))?;
        if row.len() != cols {
            bail!("row {i} has {} values, expected {cols}", row.len());
        }
        data.extend(row);
    }
    if data.len() != rows * cols {
        bail!("expected {rows}x{cols} values, found {}", data.len());
    }
    Ok(Array2::from_shape_vec((rows, cols), data)?)
}

pub fn read_vector(path: &Path) -> Result<Array1<f64>> {
    let a = read_matrix(path)?;
    if a.ncols() != 1 {
        bail!("expected a single-column vector file, got {} columns", a.ncols());
    }
    Ok(a.column(0).to_owned())
}
