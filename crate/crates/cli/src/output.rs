//! Result emission: CSV with `#`-prefixed metadata comments, or JSON with a
//! `meta` object. Both encodings carry the same cell values at full
//! round-trip precision (shortest representation that parses back to the
//! same f64), and the metadata suffices to reproduce the run exactly.

use std::io::Write;

use serde_json::json;
use sha2::{Digest, Sha256};

use crate::config::{ExperimentConfig, OutputFormat};
use crate::CmdError;

/// One table cell.
#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Null,
    Str(String),
    U64(u64),
    F64(f64),
    Bool(bool),
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Null => String::new(),
            Cell::Str(s) => quote_rfc4180(s),
            Cell::U64(v) => v.to_string(),
            Cell::F64(v) => format_f64(*v),
            Cell::Bool(v) => v.to_string(),
        }
    }

    fn json(&self) -> serde_json::Value {
        match self {
            Cell::Null => serde_json::Value::Null,
            Cell::Str(s) => json!(s),
            Cell::U64(v) => json!(v),
            Cell::F64(v) => serde_json::Number::from_f64(*v)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
            Cell::Bool(v) => json!(v),
        }
    }
}

/// Shortest decimal representation that parses back to the same f64.
fn format_f64(v: f64) -> String {
    if v.is_finite() {
        format!("{v}")
    } else {
        String::new() // align with JSON null for non-finite values
    }
}

fn quote_rfc4180(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') || s.contains('\r') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// A command's tabular result.
#[derive(Debug, Clone)]
pub struct ResultTable {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl ResultTable {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }
}

/// Run metadata echoed into every output.
#[derive(Debug, Clone)]
pub struct RunMeta {
    pub command: &'static str,
    pub seed: Option<u64>,
    pub config: ExperimentConfig,
    /// Command-specific summary values (e.g. fit slope), emitted as
    /// metadata in both formats.
    pub summary: Vec<(&'static str, f64)>,
}

impl RunMeta {
    pub fn new(command: &'static str, config: &ExperimentConfig) -> Self {
        Self {
            command,
            seed: None,
            config: config.clone(),
            summary: Vec::new(),
        }
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = Some(seed);
        self
    }

    pub fn with_summary(mut self, key: &'static str, value: f64) -> Self {
        self.summary.push((key, value));
        self
    }

    fn config_json(&self) -> String {
        serde_json::to_string(&self.config).expect("config serializes")
    }

    fn config_sha256(&self) -> String {
        let digest = Sha256::digest(format!("{}\n{}", self.command, self.config_json()));
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

pub fn version() -> &'static str {
    env!("CARGO_PKG_VERSION")
}

pub fn render_csv(table: &ResultTable, meta: &RunMeta) -> String {
    let mut out = String::new();
    out.push_str(&format!("# detsched {}\n", version()));
    out.push_str(&format!("# command: {}\n", meta.command));
    if let Some(seed) = meta.seed {
        out.push_str(&format!("# seed: {seed}\n"));
    }
    for (key, value) in &meta.summary {
        out.push_str(&format!("# {key}: {}\n", format_f64(*value)));
    }
    out.push_str(&format!("# config-sha256: {}\n", meta.config_sha256()));
    out.push_str(&format!("# config: {}\n", meta.config_json()));
    out.push_str(&meta.columns_line(table));
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(Cell::csv).collect();
        out.push_str(&line.join(","));
        out.push('\n');
    }
    out
}

impl RunMeta {
    fn columns_line(&self, table: &ResultTable) -> String {
        let header: Vec<String> = table.columns.iter().map(|c| quote_rfc4180(c)).collect();
        format!("{}\n", header.join(","))
    }
}

pub fn render_json(table: &ResultTable, meta: &RunMeta) -> String {
    let mut meta_obj = serde_json::Map::new();
    meta_obj.insert("version".into(), json!(version()));
    meta_obj.insert("command".into(), json!(meta.command));
    if let Some(seed) = meta.seed {
        meta_obj.insert("seed".into(), json!(seed));
    }
    for (key, value) in &meta.summary {
        meta_obj.insert(
            (*key).to_string(),
            serde_json::Number::from_f64(*value)
                .map(serde_json::Value::Number)
                .unwrap_or(serde_json::Value::Null),
        );
    }
    meta_obj.insert("config_sha256".into(), json!(meta.config_sha256()));
    meta_obj.insert(
        "config".into(),
        serde_json::to_value(&meta.config).expect("config serializes"),
    );
    let rows: Vec<Vec<serde_json::Value>> = table
        .rows
        .iter()
        .map(|row| row.iter().map(Cell::json).collect())
        .collect();
    let doc = json!({
        "meta": serde_json::Value::Object(meta_obj),
        "columns": table.columns,
        "rows": rows,
    });
    let mut text = serde_json::to_string_pretty(&doc).expect("document serializes");
    text.push('\n');
    text
}

/// Write the rendered output to `path` (resolved against the default output
/// directory from `DETSCHED_OUT_DIR` when relative) or to stdout.
pub fn emit(
    table: &ResultTable,
    meta: &RunMeta,
    format: OutputFormat,
    path: Option<&str>,
) -> Result<(), CmdError> {
    let rendered = match format {
        OutputFormat::Csv => render_csv(table, meta),
        OutputFormat::Json => render_json(table, meta),
    };
    match path {
        None => {
            std::io::stdout()
                .write_all(rendered.as_bytes())
                .map_err(|e| CmdError::Numeric(format!("cannot write to stdout: {e}")))?;
        }
        Some(p) => {
            let resolved = resolve_out_path(p);
            if let Some(parent) = resolved.parent() {
                if !parent.as_os_str().is_empty() {
                    std::fs::create_dir_all(parent).map_err(|e| {
                        CmdError::Usage(format!("cannot create {}: {e}", parent.display()))
                    })?;
                }
            }
            std::fs::write(&resolved, rendered).map_err(|e| {
                CmdError::Usage(format!("cannot write {}: {e}", resolved.display()))
            })?;
        }
    }
    Ok(())
}

fn resolve_out_path(p: &str) -> std::path::PathBuf {
    let path = std::path::PathBuf::from(p);
    if path.is_relative() {
        if let Ok(dir) = std::env::var("DETSCHED_OUT_DIR") {
            if !dir.is_empty() {
                return std::path::PathBuf::from(dir).join(path);
            }
        }
    }
    path
}
