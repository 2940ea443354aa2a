//! Whitespace-matrix text format: one trading day per line, one price
//! relative per whitespace-separated field. Blank lines are ignored.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};
use crate::market::ReturnsMatrix;
use crate::scalar::Scalar;

pub fn parse_returns<T: Scalar>(text: &str) -> Result<ReturnsMatrix<T>> {
    let mut values = Vec::new();
    let mut cols = None;
    let mut rows = 0;
    for (idx, line) in text.lines().enumerate() {
        let line_no = idx + 1;
        let fields: Vec<&str> = line.split_whitespace().collect();
        if fields.is_empty() {
            continue;
        }
        let expected = *cols.get_or_insert(fields.len());
        if fields.len() != expected {
            return Err(Error::Ragged {
                line: line_no,
                expected,
                found: fields.len(),
            });
        }
        for (col, field) in fields.iter().enumerate() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line: line_no,
                column: col + 1,
                message: format!("`{field}` is not a decimal number"),
            })?;
            if !(v > 0.0) || !v.is_finite() {
                return Err(Error::NonPositive {
                    line: line_no,
                    column: col + 1,
                    value: v,
                });
            }
            values.push(T::lit(v));
        }
        rows += 1;
    }
    let cols = cols.ok_or(Error::Empty("returns file"))?;
    ReturnsMatrix::new(rows, cols, values)
}

pub fn load_returns<T: Scalar>(path: impl AsRef<Path>) -> Result<ReturnsMatrix<T>> {
    parse_returns(&fs::read_to_string(path)?)
}

/// Tickers file: whitespace-separated names, in column order.
pub fn load_tickers(path: impl AsRef<Path>) -> Result<Vec<String>> {
    Ok(fs::read_to_string(path)?
        .split_whitespace()
        .map(str::to_owned)
        .collect())
}

/// Loads a returns file and, when given, attaches its ticker sidecar.
pub fn load_dataset(data: impl AsRef<Path>, tickers: Option<&Path>) -> Result<ReturnsMatrix<f64>> {
    let m = load_returns(data)?;
    match tickers {
        Some(t) => m.with_labels(load_tickers(t)?),
        None => Ok(m),
    }
}

/// Formats every entry with 17 significant digits, which round-trips `f64`
/// exactly.
pub fn format_returns<T: Scalar>(m: &ReturnsMatrix<T>) -> String {
    let mut out = String::with_capacity(m.rows() * m.cols() * 24);
    for row in m.iter_rows() {
        for (j, x) in row.iter().enumerate() {
            if j > 0 {
                out.push(' ');
            }
            write!(out, "{:.16e}", x.as_f64()).expect("write to string");
        }
        out.push('\n');
    }
    out
}

pub fn save_returns<T: Scalar>(m: &ReturnsMatrix<T>, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, format_returns(m))?;
    Ok(())
}
