//! Tabular sweep output with fixed-precision CSV and JSON emission.

use std::io::Write;

use serde::Serialize;
use serde_json::{Map, Value};

use crate::error::{invalid, Result};

/// Formats a float with 17 significant digits so CSV output is byte-stable.
pub fn format_float(x: f64) -> String {
    if x == 0.0 {
        // fold -0.0 into 0.0
        return format!("{:.16e}", 0.0);
    }
    format!("{x:.16e}")
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Column {
    pub name: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize)]
pub struct SweepResult {
    pub columns: Vec<Column>,
    pub metadata: Map<String, Value>,
}

impl SweepResult {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_column(mut self, name: &str, values: Vec<f64>) -> Self {
        self.push_column(name, values);
        self
    }

    pub fn push_column(&mut self, name: &str, values: Vec<f64>) {
        if let Some(first) = self.columns.first() {
            assert_eq!(
                first.values.len(),
                values.len(),
                "column '{name}' length differs from '{}'",
                first.name
            );
        }
        self.columns.push(Column {
            name: name.to_string(),
            values,
        });
    }

    pub fn set_meta(&mut self, key: &str, value: impl Into<Value>) {
        self.metadata.insert(key.to_string(), value.into());
    }

    pub fn rows(&self) -> usize {
        self.columns.first().map_or(0, |c| c.values.len())
    }

    pub fn column(&self, name: &str) -> Option<&[f64]> {
        self.columns
            .iter()
            .find(|c| c.name == name)
            .map(|c| c.values.as_slice())
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(writer);
        let io_err = |e: csv::Error| invalid(format!("CSV write failed: {e}"));
        w.write_record(self.columns.iter().map(|c| c.name.as_str()))
            .map_err(io_err)?;
        for row in 0..self.rows() {
            w.write_record(self.columns.iter().map(|c| format_float(c.values[row])))
                .map_err(io_err)?;
        }
        w.flush()
            .map_err(|e| invalid(format!("CSV write failed: {e}")))?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> String {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)
            .expect("writing to memory cannot fail");
        String::from_utf8(buf).expect("CSV output is ASCII")
    }

    /// JSON object: `{"metadata": {...}, "columns": {"name": [..], ...}, "column_order": [...]}`.
    pub fn to_json(&self) -> Value {
        let mut cols = Map::new();
        for c in &self.columns {
            cols.insert(c.name.clone(), Value::from(c.values.clone()));
        }
        let order: Vec<Value> = self
            .columns
            .iter()
            .map(|c| Value::from(c.name.clone()))
            .collect();
        let mut obj = Map::new();
        obj.insert("metadata".into(), Value::Object(self.metadata.clone()));
        obj.insert("column_order".into(), Value::Array(order));
        obj.insert("columns".into(), Value::Object(cols));
        Value::Object(obj)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = SweepResult::new()
            .with_column("a", vec![0.0, 1.5])
            .with_column("b", vec![-0.0, 1.0 / 3.0]);
        r.set_meta("note", "x");
        let csv = r.to_csv_string();
        assert_eq!(
            csv,
            "a,b\n0.0000000000000000e0,0.0000000000000000e0\n1.5000000000000000e0,3.3333333333333331e-1\n"
        );
        let json = r.to_json();
        assert_eq!(json["columns"]["b"][1], Value::from(1.0 / 3.0));
        assert_eq!(json["metadata"]["note"], "x");
    }

    #[test]
    fn seventeen_digits_round_trip() {
        for x in [std::f64::consts::PI, 1e-300, -2.5e17, 0.1 + 0.2] {
            let s = format_float(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
        }
    }

    #[test]
    #[should_panic]
    fn ragged_columns_rejected() {
        let _ = SweepResult::new()
            .with_column("a", vec![1.0])
            .with_column("b", vec![]);
    }
}
