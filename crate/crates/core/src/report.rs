//! Tabular experiment reports, written as CSV or JSON lines.
//!
//! Both formats start with the resolved configuration, so an output file
//! is enough to rerun the experiment.

use std::io::Write;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Jsonl,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub name: String,
    pub config: Value,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
    pub summary: Value,
}

/// JSON value for a float; non-finite values become strings.
pub fn num(x: f64) -> Value {
    if x.is_finite() {
        serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
    } else if x.is_nan() {
        Value::String("nan".into())
    } else if x > 0.0 {
        Value::String("inf".into())
    } else {
        Value::String("-inf".into())
    }
}

fn cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn io(e: impl std::fmt::Display) -> Error {
    Error::Io(e.to_string())
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, config: Value, columns: &[&str]) -> Self {
        ExperimentReport {
            name: name.into(),
            config,
            columns: columns.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            summary: Value::Null,
        }
    }

    pub fn push(&mut self, row: Vec<Value>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    pub fn write<W: Write>(&self, w: W, format: Format) -> Result<()> {
        match format {
            Format::Csv => self.write_csv(w),
            Format::Jsonl => self.write_jsonl(w),
        }
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "# {}", self.name).map_err(io)?;
        writeln!(w, "# config: {}", self.config).map_err(io)?;
        if !self.summary.is_null() {
            writeln!(w, "# summary: {}", self.summary).map_err(io)?;
        }
        let mut cw = csv::Writer::from_writer(w);
        cw.write_record(&self.columns).map_err(io)?;
        for row in &self.rows {
            cw.write_record(row.iter().map(cell)).map_err(io)?;
        }
        cw.flush().map_err(io)
    }

    pub fn write_jsonl<W: Write>(&self, mut w: W) -> Result<()> {
        let head = serde_json::json!({ "experiment": self.name, "config": self.config });
        writeln!(w, "{head}").map_err(io)?;
        for row in &self.rows {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .cloned()
                .zip(row.iter().cloned())
                .collect();
            writeln!(w, "{}", Value::Object(obj)).map_err(io)?;
        }
        if !self.summary.is_null() {
            writeln!(w, "{}", serde_json::json!({ "summary": self.summary })).map_err(io)?;
        }
        Ok(())
    }

    pub fn to_string(&self, format: Format) -> String {
        let mut buf = Vec::new();
        self.write(&mut buf, format).expect("writing to memory");
        String::from_utf8(buf).expect("utf-8 output")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn sample() -> ExperimentReport {
        let mut r = ExperimentReport::new("demo", json!({"seed": 7}), &["n", "query_id", "mass"]);
        r.push(vec![json!(1), json!("ball,0.1"), num(0.25)]);
        r.push(vec![json!(2), json!("ball,0.1"), num(f64::INFINITY)]);
        r
    }

    #[test]
    fn csv_has_config_preamble_and_quotes() {
        let s = sample().to_string(Format::Csv);
        let lines: Vec<&str> = s.lines().collect();
        assert_eq!(lines[1], "# config: {\"seed\":7}");
        assert_eq!(lines[2], "n,query_id,mass");
        assert_eq!(lines[3], "1,\"ball,0.1\",0.25");
        assert_eq!(lines[4], "2,\"ball,0.1\",inf");
    }

    #[test]
    fn jsonl_mirrors_rows() {
        let s = sample().to_string(Format::Jsonl);
        let lines: Vec<Value> = s.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
        assert_eq!(lines[0]["config"]["seed"], 7);
        assert_eq!(lines[1]["mass"], 0.25);
        assert_eq!(lines.len(), 3);
    }
}
