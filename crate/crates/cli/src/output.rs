use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::CliError;

/// One CSV row: named cells in a fixed order. `None` is written as an empty cell.
#[derive(Debug, Clone, Default)]
pub struct Row {
    pub cells: Vec<(String, Option<f64>)>,
    pub converged: bool,
}

impl Row {
    pub fn new() -> Self {
        Self { cells: Vec::new(), converged: true }
    }

    pub fn push(&mut self, name: &str, v: impl Into<Option<f64>>) {
        self.cells.push((name.to_string(), v.into()));
    }

    pub fn get(&self, name: &str) -> Option<f64> {
        self.cells.iter().find(|(n, _)| n == name).and_then(|c| c.1)
    }
}

fn fmt(v: Option<f64>) -> String {
    match v {
        Some(x) => format!("{x}"),
        None => String::new(),
    }
}

fn io_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

/// Rows must share one schema; a trailing `converged` column is appended.
pub fn write_rows(path: &Path, rows: &[Row]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    if let Some(first) = rows.first() {
        let mut header: Vec<&str> = first.cells.iter().map(|c| c.0.as_str()).collect();
        header.push("converged");
        w.write_record(&header).map_err(|e| io_err(path, e))?;
    }
    for row in rows {
        debug_assert!(rows[0].cells.iter().map(|c| &c.0).eq(row.cells.iter().map(|c| &c.0)));
        let mut rec: Vec<String> = row.cells.iter().map(|c| fmt(c.1)).collect();
        rec.push(row.converged.to_string());
        w.write_record(&rec).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

/// Columns of equal length under the given headers.
pub fn write_columns(path: &Path, header: &[&str], cols: &[Vec<Option<f64>>]) -> Result<(), CliError> {
    let mut w = csv::Writer::from_path(path).map_err(|e| io_err(path, e))?;
    w.write_record(header).map_err(|e| io_err(path, e))?;
    let n = cols.first().map_or(0, Vec::len);
    for i in 0..n {
        w.write_record(cols.iter().map(|c| fmt(c[i]))).map_err(|e| io_err(path, e))?;
    }
    w.flush().map_err(|e| io_err(path, e))
}

pub fn write_json(path: &Path, value: &impl Serialize) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| io_err(path, e))?;
    fs::write(path, text + "\n").map_err(|e| io_err(path, e))
}
