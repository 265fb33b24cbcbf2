//! Column-ordered result tables, written as CSV or JSON lines.

use std::fmt;
use std::io::{BufRead, Write};
use std::str::FromStr;

use serde_json::{Map, Value};

use crate::error::{LabError, LabResult};

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Text(String),
    Int(u64),
    Real(f64),
}

impl fmt::Display for Cell {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Cell::Text(s) => f.write_str(s),
            Cell::Int(n) => write!(f, "{n}"),
            Cell::Real(x) => write!(f, "{x}"),
        }
    }
}

impl From<&str> for Cell {
    fn from(s: &str) -> Self {
        Cell::Text(s.to_string())
    }
}
impl From<String> for Cell {
    fn from(s: String) -> Self {
        Cell::Text(s)
    }
}
impl From<u64> for Cell {
    fn from(n: u64) -> Self {
        Cell::Int(n)
    }
}
impl From<usize> for Cell {
    fn from(n: usize) -> Self {
        Cell::Int(n as u64)
    }
}
impl From<f64> for Cell {
    fn from(x: f64) -> Self {
        Cell::Real(x)
    }
}
impl From<bool> for Cell {
    fn from(b: bool) -> Self {
        Cell::Text(b.to_string())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, clap::ValueEnum)]
pub enum OutputFormat {
    #[default]
    Csv,
    Jsonl,
}

impl OutputFormat {
    pub fn extension(self) -> &'static str {
        match self {
            OutputFormat::Csv => "csv",
            OutputFormat::Jsonl => "jsonl",
        }
    }
}

impl FromStr for OutputFormat {
    type Err = LabError;
    fn from_str(s: &str) -> LabResult<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "jsonl" => Ok(Self::Jsonl),
            _ => Err(LabError::Config(format!("unknown output format `{s}`"))),
        }
    }
}

/// Rows of cells under fixed column names. Rows keep insertion order.
#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    columns: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(
            row.len(),
            self.columns.len(),
            "row width must match columns"
        );
        self.rows.push(row);
    }

    pub fn extend(&mut self, other: Table) {
        assert_eq!(self.columns, other.columns);
        self.rows.extend(other.rows);
    }

    pub fn columns(&self) -> &[String] {
        &self.columns
    }

    pub fn rows(&self) -> &[Vec<Cell>] {
        &self.rows
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn column(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// Rows as text records, keyed by column name.
    pub fn records(&self) -> impl Iterator<Item = Record<'_>> {
        self.rows.iter().map(move |row| Record { table: self, row })
    }

    pub fn write(&self, out: impl Write, format: OutputFormat) -> LabResult<()> {
        match format {
            OutputFormat::Csv => self.write_csv(out),
            OutputFormat::Jsonl => self.write_jsonl(out),
        }
    }

    pub fn write_csv(&self, out: impl Write) -> LabResult<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.columns)?;
        for row in &self.rows {
            w.write_record(row.iter().map(|c| c.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_jsonl(&self, mut out: impl Write) -> LabResult<()> {
        for row in &self.rows {
            let obj: Map<String, Value> = self
                .columns
                .iter()
                .zip(row)
                .map(|(k, c)| {
                    let v = match c {
                        Cell::Text(s) => Value::String(s.clone()),
                        Cell::Int(n) => Value::from(*n),
                        // JSON has no NaN; keep it as text
                        Cell::Real(x) => serde_json::Number::from_f64(*x)
                            .map(Value::Number)
                            .unwrap_or_else(|| Value::String(x.to_string())),
                    };
                    (k.clone(), v)
                })
                .collect();
            serde_json::to_writer(&mut out, &obj)?;
            writeln!(out)?;
        }
        Ok(())
    }

    pub fn to_bytes(&self, format: OutputFormat) -> LabResult<Vec<u8>> {
        let mut buf = Vec::new();
        self.write(&mut buf, format)?;
        Ok(buf)
    }

    /// Reads a table back; every cell comes back as text.
    pub fn read(input: impl BufRead, format: OutputFormat) -> LabResult<Self> {
        match format {
            OutputFormat::Csv => {
                let mut r = csv::Reader::from_reader(input);
                let columns: Vec<String> = r.headers()?.iter().map(String::from).collect();
                let mut rows = Vec::new();
                for rec in r.records() {
                    rows.push(rec?.iter().map(Cell::from).collect());
                }
                Ok(Self { columns, rows })
            }
            OutputFormat::Jsonl => {
                let mut columns: Option<Vec<String>> = None;
                let mut rows = Vec::new();
                for line in input.lines() {
                    let line = line?;
                    if line.trim().is_empty() {
                        continue;
                    }
                    let obj: Map<String, Value> = serde_json::from_str(&line)?;
                    let cols = columns.get_or_insert_with(|| obj.keys().cloned().collect());
                    let row = cols
                        .iter()
                        .map(|k| match obj.get(k) {
                            Some(Value::String(s)) => Cell::Text(s.clone()),
                            Some(v) => Cell::Text(v.to_string()),
                            None => Cell::Text(String::new()),
                        })
                        .collect();
                    rows.push(row);
                }
                let columns =
                    columns.ok_or_else(|| LabError::Config("table has no rows".into()))?;
                Ok(Self { columns, rows })
            }
        }
    }
}

/// One row viewed through its table's column names.
#[derive(Debug, Clone, Copy)]
pub struct Record<'a> {
    table: &'a Table,
    row: &'a [Cell],
}

impl Record<'_> {
    pub fn text(&self, column: &str) -> String {
        self.table
            .column(column)
            .map(|i| self.row[i].to_string())
            .unwrap_or_default()
    }

    /// The column parsed as a number; NaN when absent or unparsable.
    pub fn number(&self, column: &str) -> f64 {
        match self.table.column(column).map(|i| &self.row[i]) {
            Some(Cell::Real(x)) => *x,
            Some(Cell::Int(n)) => *n as f64,
            Some(Cell::Text(s)) => s.parse().unwrap_or(f64::NAN),
            None => f64::NAN,
        }
    }
}
