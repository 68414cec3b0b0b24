//! CSV and JSON writers, provenance and plot scripts.

use std::path::{Path, PathBuf};

use serde::Serialize;
use sha2::{Digest, Sha256};
use superadiabatic::{Error, Result};

use crate::config::Precision;

#[derive(Clone, Debug, Serialize)]
pub struct Provenance {
    pub tool: &'static str,
    pub version: &'static str,
    pub command: String,
    pub config_name: String,
    pub config_sha256: String,
    pub precision: Precision,
}

impl Provenance {
    pub fn new(command: &str, config_name: &str, config_text: &str, precision: Precision) -> Self {
        Provenance {
            tool: "superadiabatic",
            version: env!("CARGO_PKG_VERSION"),
            command: command.to_string(),
            config_name: config_name.to_string(),
            config_sha256: format!("{:x}", Sha256::digest(config_text.as_bytes())),
            precision,
        }
    }
}

/// A criterion verdict carried in every summary.
#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl Check {
    pub fn new(name: &str, pass: bool, detail: String) -> Self {
        Check { name: name.to_string(), pass, detail }
    }
}

/// One table destined for a CSV file.
pub struct Table {
    pub file: String,
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(file: String, header: Vec<&'static str>) -> Self {
        Table { file, header, rows: Vec::new() }
    }
}

fn io(path: &Path, e: impl std::fmt::Display) -> Error {
    Error::config(format!("cannot write {}: {e}", path.display()))
}

/// Columns printed as integers; everything else is written as `{:.16e}`.
const INTEGER_COLUMNS: &[&str] = &["n", "k", "holds", "parity"];

fn cell(v: f64, integer: bool) -> String {
    if integer {
        format!("{}", v as i64)
    } else {
        format!("{v:.16e}")
    }
}

pub fn write_table(dir: &Path, table: &Table) -> Result<PathBuf> {
    let path = dir.join(&table.file);
    let mut w = csv::Writer::from_path(&path).map_err(|e| io(&path, e))?;
    w.write_record(&table.header).map_err(|e| io(&path, e))?;
    for row in &table.rows {
        let cells = row.iter().zip(&table.header).map(|(v, h)| cell(*v, INTEGER_COLUMNS.contains(h)));
        w.write_record(cells).map_err(|e| io(&path, e))?;
    }
    w.flush().map_err(|e| io(&path, e))?;
    Ok(path)
}

pub fn write_json<T: Serialize>(dir: &Path, file: &str, value: &T) -> Result<PathBuf> {
    let path = dir.join(file);
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::numeric(e.to_string()))?;
    std::fs::write(&path, text + "\n").map_err(|e| io(&path, e))?;
    Ok(path)
}

/// A gnuplot script plotting columns `ys` of `table` against column `x`.
pub fn gnuplot_script(dir: &Path, table: &Table, x: usize, ys: &[usize], logscale_y: bool) -> String {
    let path = dir.join(&table.file);
    let mut s = String::new();
    s.push_str("set datafile separator ','\nset key autotitle columnhead\n");
    s.push_str(&format!("set xlabel '{}'\n", table.header[x]));
    if logscale_y {
        s.push_str("set logscale y\n");
    }
    let parts: Vec<String> = ys.iter().map(|&y| format!("'{}' using {}:{} with lines", path.display(), x + 1, y + 1)).collect();
    s.push_str(&format!("plot {}\n", parts.join(", \\\n     ")));
    s
}
