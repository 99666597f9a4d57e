//! Tabular output in CSV or JSON.

use std::io::Write;

use serde_json::{Map, Value};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
    Text(String),
    Bool(bool),
    Empty,
}

impl Cell {
    fn csv(&self) -> String {
        match self {
            Cell::Int(v) => v.to_string(),
            Cell::Num(v) => fmt_num(*v),
            Cell::Text(s) => s.clone(),
            Cell::Bool(b) => b.to_string(),
            Cell::Empty => String::new(),
        }
    }

    fn json(&self) -> Value {
        match self {
            Cell::Int(v) => Value::from(*v),
            Cell::Num(v) if v.is_finite() => Value::from(*v),
            Cell::Num(v) => Value::from(fmt_num(*v)),
            Cell::Text(s) => Value::from(s.clone()),
            Cell::Bool(b) => Value::from(*b),
            Cell::Empty => Value::Null,
        }
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Num(v)
    }
}

impl From<i64> for Cell {
    fn from(v: i64) -> Self {
        Cell::Int(v)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

/// 17 significant digits in scientific notation, independent of locale.
pub fn fmt_num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else {
        format!("{v:.16e}")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, serde::Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&'static str]) -> Self {
        Self { header: header.to_vec(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.header.len());
        self.rows.push(row);
    }

    pub fn write<W: Write>(&self, out: W, format: Format) -> std::io::Result<()> {
        match format {
            Format::Csv => {
                let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r.iter().map(Cell::csv))?;
                }
                w.flush()
            }
            Format::Json => {
                let rows: Vec<Value> = self
                    .rows
                    .iter()
                    .map(|r| {
                        let m: Map<String, Value> =
                            self.header.iter().zip(r).map(|(h, c)| (h.to_string(), c.json())).collect();
                        Value::Object(m)
                    })
                    .collect();
                let mut out = out;
                serde_json::to_writer_pretty(&mut out, &rows)?;
                writeln!(out)
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn numbers_carry_seventeen_digits() {
        assert_eq!(fmt_num(0.1), "1.0000000000000001e-1");
        assert_eq!(fmt_num(-2.0), "-2.0000000000000000e0");
    }

    #[test]
    fn csv_quotes_embedded_commas() {
        let mut t = Table::new(&["a", "b"]);
        t.push(vec!["LL:1,0".into(), 3usize.into()]);
        let mut buf = Vec::new();
        t.write(&mut buf, Format::Csv).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "a,b\n\"LL:1,0\",3\n");
    }

    #[test]
    fn json_keeps_column_order() {
        let mut t = Table::new(&["z", "a"]);
        t.push(vec![1.5.into(), Cell::Empty]);
        let mut buf = Vec::new();
        t.write(&mut buf, Format::Json).unwrap();
        let s = String::from_utf8(buf).unwrap();
        assert!(s.find("\"z\"").unwrap() < s.find("\"a\"").unwrap());
        assert!(s.contains("null"));
    }
}
