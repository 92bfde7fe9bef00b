use std::io::Write;

use serde_json::{json, Map, Value};

pub const SCHEMA_VERSION: u32 = 1;

/// Output of one command.
#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub command: &'static str,
    pub parameters: Vec<(String, Value)>,
    pub summary: Vec<(String, Value)>,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Value>>,
}

/// A JSON number, or `null` for non-finite values.
pub fn num(x: f64) -> Value {
    serde_json::Number::from_f64(x).map_or(Value::Null, Value::Number)
}

impl Report {
    pub fn new(command: &'static str) -> Self {
        Self { command, parameters: Vec::new(), summary: Vec::new(), columns: Vec::new(), rows: Vec::new() }
    }

    pub fn param(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.parameters.push((key.into(), value.into()));
    }

    pub fn summary(&mut self, key: impl Into<String>, value: impl Into<Value>) {
        self.summary.push((key.into(), value.into()));
    }

    pub fn write_csv<W: Write>(&self, out: W) -> anyhow::Result<()> {
        let mut out = out;
        writeln!(out, "# schema_version={SCHEMA_VERSION}")?;
        writeln!(out, "# command={}", self.command)?;
        for (k, v) in self.parameters.iter().chain(&self.summary) {
            writeln!(out, "# {k}={}", csv_cell(v))?;
        }
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(csv_cell))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn to_json(&self) -> Value {
        let object = |pairs: &[(String, Value)]| Value::Object(pairs.iter().cloned().collect::<Map<_, _>>());
        json!({
            "schema_version": SCHEMA_VERSION,
            "command": self.command,
            "parameters": object(&self.parameters),
            "summary": object(&self.summary),
            "columns": self.columns,
            "rows": self.rows,
        })
    }

    pub fn write_json<W: Write>(&self, mut out: W) -> anyhow::Result<()> {
        serde_json::to_writer_pretty(&mut out, &self.to_json())?;
        writeln!(out)?;
        Ok(())
    }
}

/// Floats carry 17 significant digits; integers, booleans and strings are
/// written as-is and `null` as an empty cell.
fn csv_cell(v: &Value) -> String {
    match v {
        Value::Null => String::new(),
        Value::Number(n) if n.is_f64() => format!("{:.16e}", n.as_f64().expect("f64 number")),
        Value::Number(n) => n.to_string(),
        Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut r = Report::new("demo");
        r.param("seed", 7u64);
        r.summary("rejected", false);
        r.columns = vec!["time".into(), "value".into()];
        r.rows.push(vec![2u64.into(), num(0.1)]);
        r.rows.push(vec![4u64.into(), num(f64::NAN)]);
        let mut buf = Vec::new();
        r.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text,
            "# schema_version=1\n# command=demo\n# seed=7\n# rejected=false\ntime,value\n2,1.0000000000000001e-1\n4,\n"
        );
        let v: f64 = "1.0000000000000001e-1".parse().unwrap();
        assert_eq!(v, 0.1);
    }

    #[test]
    fn json_layout() {
        let mut r = Report::new("demo");
        r.param("seed", 7u64);
        let v = r.to_json();
        assert_eq!(v["schema_version"], 1);
        assert_eq!(v["parameters"]["seed"], 7);
    }
}
