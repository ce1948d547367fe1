//! Command output: a parameter block, a result table and named checks,
//! rendered as text, JSON or CSV.

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    #[default]
    Text,
    Json,
    Csv,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub command: String,
    pub params: Map<String, Value>,
    pub rows: Vec<Map<String, Value>>,
    pub checks: Vec<Check>,
    pub warnings: Vec<String>,
}

/// Builds one table row with keys kept in insertion order.
#[macro_export]
#[doc(hidden)]
macro_rules! row {
    ($($k:expr => $v:expr),* $(,)?) => {{
        let mut m = serde_json::Map::new();
        $(m.insert($k.to_string(), serde_json::json!($v));)*
        m
    }};
}

impl Report {
    pub fn new(command: &str, params: Value) -> Report {
        let params = match params {
            Value::Object(m) => m,
            other => {
                let mut m = Map::new();
                m.insert("value".into(), other);
                m
            }
        };
        Report {
            command: command.to_string(),
            params,
            rows: Vec::new(),
            checks: Vec::new(),
            warnings: Vec::new(),
        }
    }

    pub fn row(&mut self, row: Map<String, Value>) {
        self.rows.push(row);
    }

    pub fn check(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.checks.push(Check {
            name: name.to_string(),
            passed,
            detail: detail.into(),
        });
    }

    pub fn warn(&mut self, msg: impl Into<String>) {
        self.warnings.push(msg.into());
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Text => self.to_text(),
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("report values are plain JSON");
                s.push('\n');
                s
            }
            Format::Csv => self.to_csv(),
        }
    }

    /// Column names in order of first appearance across rows.
    pub fn columns(&self) -> Vec<String> {
        let mut cols: Vec<String> = Vec::new();
        for r in &self.rows {
            for k in r.keys() {
                if !cols.contains(k) {
                    cols.push(k.clone());
                }
            }
        }
        cols
    }

    fn to_csv(&self) -> String {
        let cols = self.columns();
        let mut out = cols.join(",");
        out.push('\n');
        for r in &self.rows {
            let cells: Vec<String> = cols.iter().map(|c| csv_cell(r.get(c))).collect();
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }

    fn to_text(&self) -> String {
        let mut out = format!("{}\n", self.command);
        for (k, v) in &self.params {
            out.push_str(&format!("  {k} = {}\n", plain(v)));
        }
        let cols = self.columns();
        if !cols.is_empty() {
            let cells: Vec<Vec<String>> = self
                .rows
                .iter()
                .map(|r| cols.iter().map(|c| r.get(c).map(plain).unwrap_or_default()).collect())
                .collect();
            let widths: Vec<usize> = (0..cols.len())
                .map(|i| cells.iter().map(|r| r[i].len()).chain([cols[i].len()]).max().unwrap_or(0))
                .collect();
            let line = |items: &[String]| {
                let padded: Vec<String> = items.iter().zip(&widths).map(|(s, w)| format!("{s:<w$}")).collect();
                format!("{}\n", padded.join("  ").trim_end())
            };
            out.push('\n');
            out.push_str(&line(&cols));
            for r in &cells {
                out.push_str(&line(r));
            }
        }
        if !self.checks.is_empty() {
            out.push('\n');
            for c in &self.checks {
                let verdict = if c.passed { "PASS" } else { "FAIL" };
                out.push_str(&format!("{verdict} {}: {}\n", c.name, c.detail));
            }
        }
        for w in &self.warnings {
            out.push_str(&format!("warning: {w}\n"));
        }
        out
    }
}

fn plain(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        Value::Array(items) => items.iter().map(plain).collect::<Vec<_>>().join(";"),
        other => other.to_string(),
    }
}

fn csv_cell(v: Option<&Value>) -> String {
    let s = v.map(plain).unwrap_or_default();
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s
    }
}
