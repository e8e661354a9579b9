//! Report assembly and output. Everything written is a pure function of the resolved config:
//! no timestamps, no host data, ordered maps only.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::Serialize;
use serde_json::Value;
use sha2::{Digest, Sha256};
use wlsi_core::{Error, Result};

use crate::config::ExperimentConfig;

#[derive(Debug, Clone, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    /// informational lines are reported but do not decide the exit code
    pub asserted: bool,
    pub detail: String,
}

/// A two-dimensional table written as CSV.
#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table { header: header.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<f64>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }
}

#[derive(Debug, Default)]
pub struct Report {
    pub checks: Vec<Check>,
    pub results: BTreeMap<String, Value>,
    pub tables: BTreeMap<String, Table>,
}

impl Report {
    pub fn check(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, asserted: true, detail: detail.into() });
    }

    pub fn note(&mut self, name: impl Into<String>, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check { name: name.into(), passed, asserted: false, detail: detail.into() });
    }

    /// A numerical failure becomes a failed line rather than an abort.
    pub fn failure(&mut self, name: impl Into<String>, err: &Error) {
        self.check(name, false, err.to_string());
    }

    pub fn result(&mut self, key: &str, value: impl Serialize) {
        self.results.insert(key.to_string(), serde_json::to_value(value).unwrap_or(Value::Null));
    }

    pub fn table(&mut self, name: &str, table: Table) {
        self.tables.insert(name.to_string(), table);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().filter(|c| c.asserted).all(|c| c.passed)
    }
}

#[derive(Serialize)]
struct Document<'a> {
    command: &'a str,
    config: Value,
    /// sha256 of the command and the canonical JSON of the resolved config
    input_sha256: String,
    passed: bool,
    checks: &'a [Check],
    results: &'a BTreeMap<String, Value>,
    tables: Vec<String>,
}

/// The config as recorded: the output directory is where results go, not an input, so it is
/// dropped to keep reports from different directories byte-identical.
fn recorded_config(cfg: &ExperimentConfig) -> Value {
    let mut v = serde_json::to_value(cfg).expect("config serialises");
    if let Value::Object(m) = &mut v {
        m.remove("out");
    }
    v
}

pub fn input_hash(command: &str, cfg: &ExperimentConfig) -> String {
    let mut h = Sha256::new();
    h.update(command.as_bytes());
    h.update([0u8]);
    h.update(serde_json::to_vec(&recorded_config(cfg)).expect("config serialises"));
    hex::encode(h.finalize())
}

/// Writes report.json and one CSV per table into `dir`; returns the written paths.
pub fn write(dir: &Path, command: &str, cfg: &ExperimentConfig, report: &Report) -> Result<Vec<PathBuf>> {
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", dir.display()));
    fs::create_dir_all(dir).map_err(io)?;
    let mut written = Vec::new();
    for (name, table) in &report.tables {
        let path = dir.join(format!("{name}.csv"));
        let mut w = csv::Writer::from_path(&path).map_err(|e| Error::Io(e.to_string()))?;
        w.write_record(&table.header).map_err(|e| Error::Io(e.to_string()))?;
        for row in &table.rows {
            w.write_record(row.iter().map(|v| v.to_string())).map_err(|e| Error::Io(e.to_string()))?;
        }
        w.flush().map_err(io)?;
        written.push(path);
    }
    let doc = Document {
        command,
        config: recorded_config(cfg),
        input_sha256: input_hash(command, cfg),
        passed: report.passed(),
        checks: &report.checks,
        results: &report.results,
        tables: report.tables.keys().map(|k| format!("{k}.csv")).collect(),
    };
    let path = dir.join("report.json");
    let mut text = serde_json::to_string_pretty(&doc).map_err(|e| Error::Io(e.to_string()))?;
    text.push('\n');
    fs::write(&path, text).map_err(io)?;
    written.push(path);
    Ok(written)
}
