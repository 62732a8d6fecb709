//! Tabular output in CSV and JSON.

use std::fmt::Write as _;
use std::path::Path;

use serde_json::{json, Value};

use crate::config::Format;
use crate::error::CliError;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Cell {
    Int(i64),
    Num(f64),
}

impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Num(x)
    }
}

impl From<i64> for Cell {
    fn from(x: i64) -> Self {
        Cell::Int(x)
    }
}

impl From<usize> for Cell {
    fn from(x: usize) -> Self {
        Cell::Int(x as i64)
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new<S: Into<String>>(columns: impl IntoIterator<Item = S>) -> Self {
        Self { columns: columns.into_iter().map(Into::into).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> String {
        let mut out = self.columns.join(",");
        out.push('\n');
        for row in &self.rows {
            for (i, c) in row.iter().enumerate() {
                if i > 0 {
                    out.push(',');
                }
                match *c {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Num(v) => out.push_str(&format_number(v)),
                }
            }
            out.push('\n');
        }
        out
    }

    pub fn to_json(&self) -> Value {
        let rows: Vec<Value> = self
            .rows
            .iter()
            .map(|r| {
                Value::Array(
                    r.iter()
                        .map(|c| match *c {
                            Cell::Int(v) => json!(v),
                            Cell::Num(v) if v.is_finite() => json!(v),
                            Cell::Num(_) => Value::Null,
                        })
                        .collect(),
                )
            })
            .collect();
        json!({ "columns": self.columns, "rows": rows })
    }
}

/// Scientific notation with 16 significant digits; `inf`, `-inf`, `nan` otherwise.
pub fn format_number(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.15e}")
    } else if v.is_nan() {
        "nan".into()
    } else if v > 0.0 {
        "inf".into()
    } else {
        "-inf".into()
    }
}

/// Writes `stem.csv` and/or `stem.json` into `dir`, returning the file names.
pub fn write_table(dir: &Path, stem: &str, table: &Table, formats: &[Format]) -> Result<Vec<String>, CliError> {
    let mut names = Vec::new();
    for f in formats {
        let (name, body) = match f {
            Format::Csv => (format!("{stem}.csv"), table.to_csv()),
            Format::Json => (format!("{stem}.json"), serde_json::to_string_pretty(&table.to_json()).unwrap() + "\n"),
        };
        std::fs::write(dir.join(&name), body)?;
        names.push(name);
    }
    Ok(names)
}

pub fn write_json(dir: &Path, name: &str, value: &Value) -> Result<String, CliError> {
    std::fs::write(dir.join(name), serde_json::to_string_pretty(value).unwrap() + "\n")?;
    Ok(name.to_string())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout() {
        let mut t = Table::new(["n", "x"]);
        t.push(vec![Cell::Int(3), Cell::Num(0.1)]);
        t.push(vec![Cell::Int(-1), Cell::Num(f64::INFINITY)]);
        assert_eq!(t.to_csv(), "n,x\n3,1.000000000000000e-1\n-1,inf\n");
        let j = t.to_json();
        assert_eq!(j["rows"][1][1], Value::Null);
        assert_eq!(j["columns"][0], "n");
    }

    #[test]
    fn numbers_keep_sixteen_digits() {
        let s = format_number(std::f64::consts::PI);
        assert_eq!(s, "3.141592653589793e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
    }
}
