//! Tables rendered as CSV (with `#` comment header) or JSON.

use std::io::Write;

use clap::ValueEnum;
use serde_json::{json, Map, Value};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

/// Rounds to 12 significant digits; printing the result with [`fmt_num`]
/// and parsing it back gives the same `f64`.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() {
        return x;
    }
    let v: f64 = format!("{x:.11e}").parse().expect("formatted float parses");
    // no `-0` in output
    v + 0.0
}

/// Shortest representation of `round12(x)`.
pub fn fmt_num(x: f64) -> String {
    let v = round12(x);
    if v == 0.0 || (1e-5..1e15).contains(&v.abs()) {
        format!("{v}")
    } else if v.is_finite() {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Num(f64),
    Int(i64),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Text(s) => s.clone(),
            Cell::Num(x) => fmt_num(*x),
            Cell::Int(i) => i.to_string(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Text(s) => Value::String(s.clone()),
            Cell::Num(x) => {
                let v = round12(*x);
                serde_json::Number::from_f64(v)
                    .map_or_else(|| Value::String(fmt_num(v)), Value::Number)
            }
            Cell::Int(i) => json!(i),
            Cell::Bool(b) => json!(b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_owned())
    }
}

impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Bool(b)
    }
}

impl From<u64> for Cell {
    fn from(i: u64) -> Self {
        Cell::Int(i as i64)
    }
}

impl<T: Into<Cell>> From<Option<T>> for Cell {
    fn from(o: Option<T>) -> Self {
        o.map_or(Cell::Empty, Into::into)
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub schema: &'static str,
    pub meta: Vec<(String, String)>,
    pub columns: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
    /// Trailing `key=value` summary records.
    pub summary: Vec<Vec<(String, Cell)>>,
}

impl Table {
    pub fn new(schema: &'static str, columns: &[&'static str]) -> Self {
        Self {
            schema,
            meta: Vec::new(),
            columns: columns.to_vec(),
            rows: Vec::new(),
            summary: Vec::new(),
        }
    }

    pub fn meta(&mut self, key: &str, value: impl ToString) {
        self.meta.push((key.to_owned(), value.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn summarize(&mut self, record: Vec<(&str, Cell)>) {
        self.summary
            .push(record.into_iter().map(|(k, v)| (k.to_owned(), v)).collect());
    }

    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Csv => self.render_csv(),
            Format::Json => self.render_json(),
        }
    }

    fn render_csv(&self) -> String {
        let mut out = format!("#schema={}\n", self.schema);
        for (k, v) in &self.meta {
            out.push_str(&format!("#{k}={v}\n"));
        }
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(&self.columns).expect("in-memory write");
        for row in &self.rows {
            writer
                .write_record(row.iter().map(Cell::csv))
                .expect("in-memory write");
        }
        out.push_str(&String::from_utf8(writer.into_inner().expect("flush")).expect("utf-8"));
        for record in &self.summary {
            let fields: Vec<String> = record
                .iter()
                .map(|(k, v)| format!("{k}={}", v.csv()))
                .collect();
            out.push_str(&format!("#summary {}\n", fields.join(" ")));
        }
        out
    }

    fn render_json(&self) -> String {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|row| {
                let obj: Map<String, Value> = self
                    .columns
                    .iter()
                    .zip(row)
                    .map(|(c, v)| (c.to_string(), v.json()))
                    .collect();
                Value::Object(obj)
            })
            .collect();
        let meta: Map<String, Value> = self
            .meta
            .iter()
            .map(|(k, v)| (k.clone(), Value::String(v.clone())))
            .collect();
        let summary: Vec<Value> = self
            .summary
            .iter()
            .map(|rec| Value::Object(rec.iter().map(|(k, v)| (k.clone(), v.json())).collect()))
            .collect();
        let doc =
            json!({ "schema": self.schema, "metadata": meta, "rows": rows, "summary": summary });
        let mut s = serde_json::to_string_pretty(&doc).expect("serializable");
        s.push('\n');
        s
    }

    pub fn write_to(&self, format: Format, out: Option<&std::path::Path>) -> std::io::Result<()> {
        let text = self.render(format);
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().lock().write_all(text.as_bytes()),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_digit_round_trip() {
        for &x in &[
            0.1 + 0.2,
            std::f64::consts::PI,
            -1.234567890123456e-9,
            6.02214076e23,
            0.0,
            1e-5,
        ] {
            let printed = fmt_num(x);
            let back: f64 = printed.parse().unwrap();
            assert_eq!(back, round12(x), "{printed}");
            assert!(
                printed
                    .trim_start_matches('-')
                    .replace(['.', 'e'], "")
                    .len()
                    <= 16
            );
        }
        assert_eq!(fmt_num(0.1 + 0.2), "0.3");
    }

    #[test]
    fn csv_and_json_agree() {
        let mut t = Table::new("demo/1", &["a", "b", "c"]);
        t.meta("model", "asm");
        t.push(vec![1.5.into(), "x,y".into(), Cell::Empty]);
        t.summarize(vec![("max", 2.0.into())]);
        let csv = t.render(Format::Csv);
        assert!(csv.starts_with("#schema=demo/1\n#model=asm\na,b,c\n1.5,\"x,y\",\n"));
        assert!(csv.ends_with("#summary max=2\n"));
        let json: Value = serde_json::from_str(&t.render(Format::Json)).unwrap();
        assert_eq!(json["rows"][0]["a"], json!(1.5));
        assert_eq!(json["rows"][0]["c"], Value::Null);
        assert_eq!(json["metadata"]["model"], json!("asm"));
    }
}
