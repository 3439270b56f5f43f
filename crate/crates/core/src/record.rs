//! Tabular experiment output with CSV and JSON export.

use std::io::Write;

use serde_json::{json, Map, Value};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub struct RecordRow {
    pub series: String,
    /// One value per entry of [`ExperimentRecord::param_names`].
    pub params: Vec<f64>,
    /// `None` when propagation was skipped.
    pub p1_simulated: Option<f64>,
    pub p1_analytic: f64,
    pub p1_stderr: Option<f64>,
}

/// Rows of (sweep parameters, simulated P₁, analytic P₁) plus metadata.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ExperimentRecord {
    pub param_names: Vec<String>,
    pub rows: Vec<RecordRow>,
    pub metadata: Map<String, Value>,
}

fn csv_error(e: csv::Error) -> Error {
    Error::Numerical(format!("csv write failed: {e}"))
}

fn cell(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

impl ExperimentRecord {
    pub fn new(param_names: &[&str]) -> Self {
        Self {
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn has_stderr(&self) -> bool {
        self.rows.iter().any(|r| r.p1_stderr.is_some())
    }

    pub fn param(&self, row: &RecordRow, name: &str) -> Option<f64> {
        self.param_names
            .iter()
            .position(|n| n == name)
            .and_then(|i| row.params.get(i).copied())
    }

    pub fn series<'a>(&'a self, name: &'a str) -> impl Iterator<Item = &'a RecordRow> + 'a {
        self.rows.iter().filter(move |r| r.series == name)
    }

    /// Header `series,<params...>,p1_simulated,p1_analytic[,p1_stderr]`,
    /// LF line endings.
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(out);
        let with_stderr = self.has_stderr();
        let mut header = vec!["series".to_string()];
        header.extend(self.param_names.iter().cloned());
        header.extend(["p1_simulated".into(), "p1_analytic".into()]);
        if with_stderr {
            header.push("p1_stderr".into());
        }
        w.write_record(&header).map_err(csv_error)?;
        for row in &self.rows {
            if row.params.len() != self.param_names.len() {
                return Err(Error::DimensionMismatch {
                    expected: self.param_names.len(),
                    found: row.params.len(),
                });
            }
            let mut rec = vec![row.series.clone()];
            rec.extend(row.params.iter().map(|v| v.to_string()));
            rec.push(cell(row.p1_simulated));
            rec.push(row.p1_analytic.to_string());
            if with_stderr {
                rec.push(cell(row.p1_stderr));
            }
            w.write_record(&rec).map_err(csv_error)?;
        }
        w.flush()
            .map_err(|e| Error::Numerical(format!("csv flush failed: {e}")))
    }

    /// `{"metadata": {...}, "records": [{series, params..., p1_*}]}`.
    pub fn to_json(&self) -> Value {
        let records: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let mut m = Map::new();
                m.insert("series".into(), json!(row.series));
                for (name, v) in self.param_names.iter().zip(&row.params) {
                    m.insert(name.clone(), json!(v));
                }
                m.insert("p1_simulated".into(), json!(row.p1_simulated));
                m.insert("p1_analytic".into(), json!(row.p1_analytic));
                if let Some(s) = row.p1_stderr {
                    m.insert("p1_stderr".into(), json!(s));
                }
                Value::Object(m)
            })
            .collect();
        json!({ "metadata": Value::Object(self.metadata.clone()), "records": records })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_and_json_shape() {
        let mut rec = ExperimentRecord::new(&["alpha"]);
        rec.rows.push(RecordRow {
            series: "theta=0".into(),
            params: vec![-0.5],
            p1_simulated: Some(0.25),
            p1_analytic: 0.3,
            p1_stderr: None,
        });
        rec.rows.push(RecordRow {
            series: "a,b".into(),
            params: vec![1.0],
            p1_simulated: None,
            p1_analytic: 0.7,
            p1_stderr: None,
        });
        let mut buf = Vec::new();
        rec.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "series,alpha,p1_simulated,p1_analytic\ntheta=0,-0.5,0.25,0.3\n\"a,b\",1,,0.7\n"
        );
        let j = rec.to_json();
        assert_eq!(j["records"][0]["alpha"], json!(-0.5));
        assert!(j["records"][1]["p1_simulated"].is_null());
    }
}
