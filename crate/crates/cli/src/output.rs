//! CSV tables with a `#` header block, and the run manifest.

use sha2::{Digest, Sha256};
use std::fmt::Write as _;
use std::path::Path;

/// Version of every CSV column set; bumped whenever a schema changes.
pub const SCHEMA_VERSION: u32 = 1;

/// Shortest round-trip form in exponent notation.
pub fn num(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x.is_infinite() {
        if x > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{x:e}")
    }
}

#[derive(Clone, Debug)]
pub struct Table {
    pub schema: String,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new(schema: impl Into<String>, columns: &[&'static str]) -> Self {
        Table {
            schema: schema.into(),
            meta: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row(&mut self, values: Vec<String>) {
        debug_assert_eq!(values.len(), self.columns.len());
        self.rows.push(values);
    }

    pub fn render(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "# bures {} schema={}/{}", env!("CARGO_PKG_VERSION"), self.schema, SCHEMA_VERSION);
        for (k, v) in &self.meta {
            let _ = writeln!(s, "# {k}: {v}");
        }
        s.push_str(&self.columns.join(","));
        s.push('\n');
        for r in &self.rows {
            s.push_str(&r.join(","));
            s.push('\n');
        }
        s
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().fold(String::with_capacity(64), |mut s, b| {
        let _ = write!(s, "{b:02x}");
        s
    })
}

/// Parsed CSV produced by [`Table::render`]: header metadata and rows.
#[derive(Clone, Debug, PartialEq)]
pub struct ParsedTable {
    pub meta: Vec<(String, String)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

impl ParsedTable {
    pub fn parse(text: &str) -> Self {
        let mut meta = Vec::new();
        let mut columns = Vec::new();
        let mut rows = Vec::new();
        for line in text.lines() {
            if let Some(rest) = line.strip_prefix("# ") {
                if let Some((k, v)) = rest.split_once(": ") {
                    meta.push((k.to_string(), v.to_string()));
                }
            } else if columns.is_empty() {
                columns = line.split(',').map(str::to_string).collect();
            } else if !line.is_empty() {
                rows.push(line.split(',').map(str::to_string).collect());
            }
        }
        ParsedTable { meta, columns, rows }
    }

    pub fn meta_value(&self, key: &str) -> Option<&str> {
        self.meta.iter().find(|(k, _)| k == key).map(|(_, v)| v.as_str())
    }

    /// Column `name` as floats (`nan` and `inf` included).
    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let i = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[i].parse::<f64>().unwrap_or(f64::NAN)).collect())
    }

    pub fn read(path: &Path) -> std::io::Result<Self> {
        Ok(Self::parse(&std::fs::read_to_string(path)?))
    }
}
