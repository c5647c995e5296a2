//! Tables and their CSV / JSON renderings.
//!
//! CSV files start with `#` metadata lines, then a header row. JSON files
//! hold `{"metadata": {...}, "rows": [{column: value}, ...]}` with the same
//! values as the CSV (floats rounded to the same precision).

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use serde_json::{Map, Value};

use crate::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Float(f64),
    Int(i64),
    Text(String),
    Bool(bool),
    Empty,
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Float(v)
    }
}

impl From<Option<f64>> for Cell {
    fn from(v: Option<f64>) -> Self {
        v.map_or(Cell::Empty, Cell::Float)
    }
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as i64)
    }
}

impl From<bool> for Cell {
    fn from(v: bool) -> Self {
        Cell::Bool(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_string())
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: Vec<String>) -> Self {
        Table {
            columns,
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.columns.len(), "row width");
        self.rows.push(row);
    }
}

/// `%g`-style rendering with `precision` significant digits.
pub fn format_float(v: f64, precision: usize) -> String {
    if v.is_nan() {
        return "nan".to_string();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if v == 0.0 {
        return "0".to_string();
    }
    let p = precision.max(1);
    let sci = format!("{:.*e}", p - 1, v);
    let (mantissa, exp) = sci.split_once('e').expect("exponent");
    let exp: i32 = exp.parse().expect("exponent");
    if exp < -5 || exp >= p as i32 {
        format!("{}e{exp}", trim_zeros(mantissa))
    } else {
        let decimals = (p as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn render(cell: &Cell, precision: usize) -> String {
    match cell {
        Cell::Float(v) => format_float(*v, precision),
        Cell::Int(v) => v.to_string(),
        Cell::Text(s) => s.clone(),
        Cell::Bool(b) => b.to_string(),
        Cell::Empty => String::new(),
    }
}

fn json_cell(cell: &Cell, precision: usize) -> Value {
    match cell {
        Cell::Float(v) if v.is_finite() => {
            let rounded: f64 = format_float(*v, precision).parse().expect("float");
            serde_json::Number::from_f64(rounded).map_or(Value::Null, Value::Number)
        }
        Cell::Float(_) | Cell::Empty => Value::Null,
        Cell::Int(v) => Value::from(*v),
        Cell::Text(s) => Value::from(s.as_str()),
        Cell::Bool(b) => Value::from(*b),
    }
}

fn io_error(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |source| CliError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Metadata lines are written as `# key: value`.
pub fn write_csv(path: &Path, metadata: &[(String, String)], table: &Table, precision: usize) -> Result<(), CliError> {
    let err = io_error(path);
    let file = File::create(path).map_err(&err)?;
    let mut out = BufWriter::new(file);
    for (key, value) in metadata {
        writeln!(out, "# {key}: {value}").map_err(&err)?;
    }
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let csv_err = |e: csv::Error| CliError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::other(e),
        };
        w.write_record(&table.columns).map_err(csv_err)?;
        for row in &table.rows {
            w.write_record(row.iter().map(|c| render(c, precision)))
                .map_err(csv_err)?;
        }
        w.flush().map_err(&err)?;
    }
    out.flush().map_err(&err)
}

pub fn table_json(metadata: &Map<String, Value>, table: &Table, precision: usize) -> Value {
    let rows: Vec<Value> = table
        .rows
        .iter()
        .map(|row| {
            let obj: Map<String, Value> = table
                .columns
                .iter()
                .zip(row)
                .map(|(c, v)| (c.clone(), json_cell(v, precision)))
                .collect();
            Value::Object(obj)
        })
        .collect();
    serde_json::json!({ "metadata": metadata, "rows": rows })
}

pub fn write_json(path: &Path, value: &Value) -> Result<(), CliError> {
    let err = io_error(path);
    let file = File::create(path).map_err(&err)?;
    let mut out = BufWriter::new(file);
    serde_json::to_writer_pretty(&mut out, value).map_err(|e| CliError::Io {
        path: path.to_path_buf(),
        source: std::io::Error::other(e),
    })?;
    writeln!(out).map_err(&err)?;
    out.flush().map_err(&err)
}

/// `results.csv` → `results.csv.meta.json`.
pub fn sidecar_path(path: &Path) -> PathBuf {
    let mut name = path.as_os_str().to_owned();
    name.push(".meta.json");
    PathBuf::from(name)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn general_format() {
        assert_eq!(format_float(0.0, 12), "0");
        assert_eq!(format_float(-0.0, 12), "0");
        assert_eq!(format_float(0.5, 12), "0.5");
        assert_eq!(format_float(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(format_float(-2.0 / 3.0, 3), "-0.667");
        assert_eq!(format_float(8.0, 12), "8");
        assert_eq!(format_float(1234.5, 3), "1.23e3");
        assert_eq!(format_float(1.25e-7, 12), "1.25e-7");
        assert_eq!(format_float(0.0001, 12), "0.0001");
        assert_eq!(format_float(f64::NAN, 12), "nan");
    }

    #[test]
    fn json_rounds_like_csv() {
        let mut t = Table::new(vec!["x".into(), "label".into(), "missing".into()]);
        t.push(vec![Cell::Float(1.0 / 3.0), "a,b".into(), Cell::Empty]);
        let v = table_json(&Map::new(), &t, 4);
        assert_eq!(v["rows"][0]["x"], serde_json::json!(0.3333));
        assert_eq!(v["rows"][0]["missing"], Value::Null);
    }

    #[test]
    fn sidecar_name() {
        assert_eq!(sidecar_path(Path::new("out/w.csv")), PathBuf::from("out/w.csv.meta.json"));
    }
}
