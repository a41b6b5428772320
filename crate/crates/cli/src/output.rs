//! Result tables and their CSV / JSON encodings.
//!
//! CSV has exactly one header line and a fixed column order. Every row ends
//! with `version` and `config_sha256` so that any fragment of a file still
//! identifies the run that produced it. Floats are written as `{:.16e}`.

use serde_json::{json, Map, Value};

use crate::config::OutputFormat;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Bool(bool),
    Text(String),
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Self::Float(v)
    }
}

impl From<i32> for Cell {
    fn from(v: i32) -> Self {
        Self::Int(v.into())
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Self::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Self::Bool(v)
    }
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Self::Float(v) => format!("{v:.16e}"),
            Self::Int(v) => v.to_string(),
            Self::Bool(v) => v.to_string(),
            Self::Text(s) => s.clone(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Self::Float(v) => json!(v),
            Self::Int(v) => json!(v),
            Self::Bool(v) => json!(v),
            Self::Text(s) => json!(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub command: String,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(command: &str, columns: Vec<&'static str>) -> Self {
        Self {
            command: command.to_string(),
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn encode(&self, format: OutputFormat, config_hash: &str, config_text: &str) -> String {
        match format {
            OutputFormat::Csv => self.csv(config_hash),
            OutputFormat::Json => self.json(config_hash, config_text),
        }
    }

    fn csv(&self, config_hash: &str) -> String {
        let version = env!("CARGO_PKG_VERSION");
        let mut out = self.columns.join(",");
        out.push_str(",version,config_sha256\n");
        for row in &self.rows {
            let cells: Vec<String> = row.iter().map(Cell::csv).collect();
            out.push_str(&cells.join(","));
            out.push_str(&format!(",{version},{config_hash}\n"));
        }
        out
    }

    fn json(&self, config_hash: &str, config_text: &str) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                for (c, v) in self.columns.iter().zip(row) {
                    m.insert((*c).to_string(), v.json());
                }
                Value::Object(m)
            })
            .collect();
        let doc = json!({
            "command": self.command,
            "version": env!("CARGO_PKG_VERSION"),
            "config_sha256": config_hash,
            "config": config_text,
            "columns": self.columns,
            "rows": rows,
        });
        let mut s = serde_json::to_string_pretty(&doc).expect("table serializes");
        s.push('\n');
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Table {
        let mut t = Table::new("spectrum", vec!["r0", "l_out", "weight", "converged"]);
        t.push(vec![0.5.into(), 2.into(), (1.0 / 3.0).into(), true.into()]);
        t.push(vec![0.5.into(), 3.into(), 0.0.into(), false.into()]);
        t
    }

    #[test]
    fn csv_layout() {
        let s = sample().encode(OutputFormat::Csv, "abc", "");
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines.len(), 3);
        assert_eq!(lines[0], "r0,l_out,weight,converged,version,config_sha256");
        assert!(lines[1].starts_with("5.0000000000000000e-1,2,3.3333333333333331e-1,true,"));
        assert!(lines[1].ends_with(",abc"));
        let back: f64 = lines[1].split(',').nth(2).unwrap().parse().unwrap();
        assert_eq!(back, 1.0 / 3.0);
    }

    #[test]
    fn json_mirrors_csv() {
        let s = sample().encode(OutputFormat::Json, "abc", "[beam]\nl = 1\n");
        let v: Value = serde_json::from_str(&s).unwrap();
        assert_eq!(v["config_sha256"], "abc");
        assert_eq!(v["rows"].as_array().unwrap().len(), 2);
        assert_eq!(v["rows"][0]["weight"].as_f64().unwrap(), 1.0 / 3.0);
        assert_eq!(v["rows"][1]["converged"], false);
        assert_eq!(v["columns"][1], "l_out");
    }
}
