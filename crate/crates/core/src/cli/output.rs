//! CSV / JSON tables and run manifests.

use std::fmt::Write as _;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use clap::ValueEnum;
use serde::Serialize;
use serde_json::{json, Map, Value};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(i64),
    Float(f64),
    Empty,
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Text(if v { "pass" } else { "fail" }.to_owned())
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

/// Shortest decimal that round-trips, switching to exponent notation
/// outside `[1e-5, 1e16)`.
pub fn format_float(v: f64) -> String {
    if v == 0.0 {
        return "0".to_owned();
    }
    if !v.is_finite() {
        return if v.is_nan() { "NaN".to_owned() } else if v > 0.0 { "inf".to_owned() } else { "-inf".to_owned() };
    }
    let a = v.abs();
    if (1e-5..1e16).contains(&a) {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Int(i) => i.to_string(),
            Cell::Float(v) => format_float(*v),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Int(i) => json!(i),
            Cell::Float(v) if v.is_finite() => json!(v),
            Cell::Float(_) | Cell::Empty => Value::Null,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self {
            header: header.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            let line: Vec<String> = row.iter().map(Cell::csv).collect();
            let _ = writeln!(out, "{}", line.join(","));
        }
        out
    }

    pub fn records(&self) -> Vec<Value> {
        self.rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .header
                    .iter()
                    .zip(row)
                    .map(|(h, c)| ((*h).to_owned(), c.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect()
    }
}

/// Everything needed to re-run a command and check its outputs.
#[derive(Debug, Clone, Serialize)]
pub struct RunManifest {
    pub command: String,
    pub params: Value,
    pub seed: Option<u64>,
    pub tool_version: &'static str,
    pub generator: Option<&'static str>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<u64>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub outputs: Vec<OutputChecksum>,
}

#[derive(Debug, Clone, Serialize)]
pub struct OutputChecksum {
    pub path: String,
    pub sha256: String,
}

impl RunManifest {
    pub fn new(command: &str, params: Value, seed: Option<u64>, generator: Option<&'static str>) -> Self {
        Self {
            command: command.to_owned(),
            params,
            seed,
            tool_version: env!("CARGO_PKG_VERSION"),
            generator,
            timestamp: None,
            outputs: Vec::new(),
        }
    }
}

/// Renders the table. The inline JSON manifest carries no timestamp or
/// checksums so that reruns stay byte-identical.
pub fn render(table: &Table, format: Format, manifest: &RunManifest) -> String {
    match format {
        Format::Csv => table.to_csv(),
        Format::Json => {
            let doc = json!({ "manifest": manifest, "records": table.records() });
            let mut s = serde_json::to_string_pretty(&doc).expect("tables serialize");
            s.push('\n');
            s
        }
    }
}

pub fn manifest_path(out: &Path) -> PathBuf {
    let mut name = out.file_name().map(|n| n.to_os_string()).unwrap_or_default();
    name.push(".manifest.json");
    out.with_file_name(name)
}

/// Writes the data to `out` (or stdout) and, for files, a sidecar manifest.
pub fn emit(table: &Table, format: Format, out: Option<&Path>, mut manifest: RunManifest) -> std::io::Result<()> {
    let data = render(table, format, &manifest);
    match out {
        None => {
            let mut stdout = std::io::stdout().lock();
            stdout.write_all(data.as_bytes())?;
            stdout.flush()
        }
        Some(path) => {
            fs::write(path, data.as_bytes())?;
            manifest.outputs.push(OutputChecksum {
                path: path.display().to_string(),
                sha256: format!("{:x}", Sha256::digest(data.as_bytes())),
            });
            manifest.timestamp = SystemTime::now().duration_since(UNIX_EPOCH).ok().map(|d| d.as_secs());
            let text = serde_json::to_string_pretty(&manifest).expect("manifest serializes");
            fs::write(manifest_path(path), text + "\n")
        }
    }
}
