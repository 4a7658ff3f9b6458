//! CSV tables, the summary document and the run manifest.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use ern_core::{Complex64, NullProfile};
use serde::Serialize;

use crate::config::RunConfig;
use crate::error::{CliError, CliResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
}

/// A CSV table with snake_case column names.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(name: &str, columns: &[&str]) -> Self {
        Self {
            name: name.to_string(),
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    /// Table `(coordinate, value_re, value_im)` of a null profile.
    pub fn profile(name: &str, coordinate: &str, profile: &NullProfile) -> Self {
        let mut t = Self::new(name, &[coordinate, "phi_re", "phi_im"]);
        for (x, z) in profile.coordinates.iter().zip(&profile.samples) {
            t.push(vec![Cell::Float(*x), Cell::Float(z.re), Cell::Float(z.im)]);
        }
        t
    }

    pub fn file_name(&self) -> String {
        format!("{}.csv", self.name)
    }

    pub fn render(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(render_cell).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

pub fn complex_cells(z: Complex64) -> [Cell; 2] {
    [Cell::Float(z.re), Cell::Float(z.im)]
}

/// Seventeen significant digits.
pub fn render_float(x: f64) -> String {
    let mut s = String::new();
    write!(s, "{x:.16e}").expect("string write");
    s
}

fn render_cell(c: &Cell) -> String {
    match c {
        Cell::Float(x) => render_float(*x),
        Cell::Int(k) => k.to_string(),
    }
}

pub fn write_csv(dir: &Path, table: &Table) -> CliResult<PathBuf> {
    let path = dir.join(table.file_name());
    std::fs::write(&path, table.render()).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Scalar results of a scenario, keyed by functional name.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Summary {
    pub scenario: String,
    pub config_hash: String,
    pub version: String,
    pub values: BTreeMap<String, f64>,
    pub invariants: BTreeMap<String, bool>,
    pub passed: bool,
}

impl Summary {
    pub fn new(cfg: &RunConfig) -> Self {
        Self {
            scenario: cfg.scenario().name().to_string(),
            config_hash: cfg.hash(),
            version: env!("CARGO_PKG_VERSION").to_string(),
            ..Self::default()
        }
    }

    pub fn value(&mut self, name: &str, x: f64) {
        self.values.insert(name.to_string(), x);
    }

    pub fn values(&mut self, entries: &BTreeMap<String, f64>) {
        self.values.extend(entries.iter().map(|(k, v)| (k.clone(), *v)));
    }

    pub fn check(&mut self, name: &str, ok: bool) {
        self.invariants.insert(name.to_string(), ok);
    }

    pub fn failures(&self) -> Vec<String> {
        self.invariants
            .iter()
            .filter(|(_, ok)| !**ok)
            .map(|(k, _)| k.clone())
            .collect()
    }

    fn finish(&mut self) {
        self.passed = self.invariants.values().all(|ok| *ok);
    }
}

pub const SUMMARY_FILE: &str = "summary.json";
pub const MANIFEST_FILE: &str = "manifest.json";

pub fn write_summary(dir: &Path, summary: &mut Summary) -> CliResult<PathBuf> {
    summary.finish();
    let path = dir.join(SUMMARY_FILE);
    let mut text = serde_json::to_string_pretty(summary).expect("summary serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}

/// Record of one invocation. The wall clock makes it the only output that
/// differs between identical runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunManifest {
    pub scenario: String,
    pub config: RunConfig,
    pub version: String,
    pub wall_clock_seconds: f64,
    pub outputs: Vec<String>,
    pub passed: bool,
}

pub fn write_manifest(dir: &Path, manifest: &RunManifest) -> CliResult<PathBuf> {
    let path = dir.join(MANIFEST_FILE);
    let mut text = serde_json::to_string_pretty(manifest).expect("manifest serializes");
    text.push('\n');
    std::fs::write(&path, text).map_err(|e| CliError::io(&path, e))?;
    Ok(path)
}
