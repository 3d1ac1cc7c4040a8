//! Record streams framed by a header echoing the effective config and a
//! terminal status record. Data records are flushed once per chunk.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::Path;

use serde_json::{json, Map, Value};

use crate::config::{Format, RunConfig};

pub type Row = Map<String, Value>;

pub struct RecordSink {
    out: Box<dyn Write>,
    format: Format,
    kind: &'static str,
    columns: Option<Vec<String>>,
    records: usize,
    violations: usize,
}

/// CSV cell text: strings verbatim, everything else as its JSON text.
fn cell(v: Option<&Value>) -> String {
    match v {
        None | Some(Value::Null) => String::new(),
        Some(Value::String(s)) => s.clone(),
        Some(other) => other.to_string(),
    }
}

impl RecordSink {
    pub fn open(path: Option<&Path>, format: Format, kind: &'static str) -> io::Result<Self> {
        let out: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Self::from_writer(out, format, kind))
    }

    pub fn from_writer(out: Box<dyn Write>, format: Format, kind: &'static str) -> Self {
        RecordSink {
            out,
            format,
            kind,
            columns: None,
            records: 0,
            violations: 0,
        }
    }

    pub fn records(&self) -> usize {
        self.records
    }

    pub fn violations(&self) -> usize {
        self.violations
    }

    fn meta_line(&mut self, value: &Value) -> io::Result<()> {
        match self.format {
            Format::Jsonl => writeln!(self.out, "{value}"),
            Format::Csv => writeln!(self.out, "# {value}"),
        }
    }

    pub fn header(&mut self, cfg: &RunConfig, timestamp: u64) -> io::Result<()> {
        let header = json!({
            "record": "header",
            "tool": "werner",
            "version": env!("CARGO_PKG_VERSION"),
            "timestamp": timestamp,
            "config": cfg,
        });
        self.meta_line(&header)?;
        self.out.flush()
    }

    /// Writes rows and flushes. Every row carries a boolean `violation`.
    pub fn write_chunk(&mut self, rows: Vec<Row>) -> io::Result<()> {
        let mut csv_buf = Vec::new();
        for mut row in rows {
            if row.get("violation").and_then(Value::as_bool) == Some(true) {
                self.violations += 1;
            }
            self.records += 1;
            match self.format {
                Format::Jsonl => {
                    let mut full = Map::with_capacity(row.len() + 1);
                    full.insert("record".into(), Value::from(self.kind));
                    full.append(&mut row);
                    writeln!(self.out, "{}", Value::Object(full))?;
                }
                Format::Csv => {
                    let mut w = csv::WriterBuilder::new().from_writer(&mut csv_buf);
                    let columns = self.columns.get_or_insert_with(|| row.keys().cloned().collect());
                    if self.records == 1 {
                        w.write_record(columns.iter())?;
                    }
                    w.write_record(columns.iter().map(|k| cell(row.get(k))))?;
                    w.flush()?;
                }
            }
        }
        self.out.write_all(&csv_buf)?;
        self.out.flush()
    }

    /// Counts a failed whole-run check as a violation.
    pub fn add_violation(&mut self) {
        self.violations += 1;
    }

    pub fn status(&mut self, status: &str, exit_code: i32, summary: Value) -> io::Result<()> {
        let record = json!({
            "record": "status",
            "status": status,
            "records": self.records,
            "violations": self.violations,
            "exit_code": exit_code,
            "summary": summary,
        });
        self.meta_line(&record)?;
        self.out.flush()
    }
}

/// Converts a `json!` object literal into a row.
pub fn row(value: Value) -> Row {
    match value {
        Value::Object(m) => m,
        other => panic!("record must be a JSON object, got {other}"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::sync::{Arc, Mutex};

    #[derive(Clone, Default)]
    struct Shared(Arc<Mutex<Vec<u8>>>);

    impl Write for Shared {
        fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
            self.0.lock().unwrap().extend_from_slice(buf);
            Ok(buf.len())
        }
        fn flush(&mut self) -> io::Result<()> {
            Ok(())
        }
    }

    fn text(s: &Shared) -> String {
        String::from_utf8(s.0.lock().unwrap().clone()).unwrap()
    }

    #[test]
    fn jsonl_counts_violations() {
        let buf = Shared::default();
        let mut sink = RecordSink::from_writer(Box::new(buf.clone()), Format::Jsonl, "sample");
        sink.write_chunk(vec![row(json!({"x": 1.5, "violation": false})), row(json!({"x": 2, "violation": true}))]).unwrap();
        sink.status("complete", 1, json!({})).unwrap();
        let t = text(&buf);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], r#"{"record":"sample","x":1.5,"violation":false}"#);
        assert_eq!(sink.violations(), 1);
        assert!(lines[2].contains(r#""violations":1"#));
    }

    #[test]
    fn csv_table_between_comments() {
        let buf = Shared::default();
        let mut sink = RecordSink::from_writer(Box::new(buf.clone()), Format::Csv, "sample");
        sink.write_chunk(vec![row(json!({"a": 0.1, "b": "p,q", "violation": false}))]).unwrap();
        sink.write_chunk(vec![row(json!({"a": null, "b": [1, 2], "violation": false}))]).unwrap();
        sink.status("complete", 0, json!({})).unwrap();
        let t = text(&buf);
        let lines: Vec<&str> = t.lines().collect();
        assert_eq!(lines[0], "a,b,violation");
        assert_eq!(lines[1], "0.1,\"p,q\",false");
        assert_eq!(lines[2], ",\"[1,2]\",false");
        assert!(lines[3].starts_with("# {\"record\":\"status\""));
    }

    #[test]
    fn full_precision_floats() {
        let buf = Shared::default();
        let mut sink = RecordSink::from_writer(Box::new(buf.clone()), Format::Jsonl, "s");
        let x = 0.1f64 + 0.2;
        sink.write_chunk(vec![row(json!({"x": x, "violation": false}))]).unwrap();
        let v: Value = serde_json::from_str(text(&buf).lines().next().unwrap()).unwrap();
        assert_eq!(v["x"].as_f64().unwrap().to_bits(), x.to_bits());
    }
}
