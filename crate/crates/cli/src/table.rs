//! In-memory result tables and their CSV encoding: `,` separators, `\n`
//! line ends, reals in scientific notation with 17 significant digits.

use std::fmt::Write as _;

use crate::error::CliError;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Int(u64),
    Real(f64),
    Text(String),
}

impl From<usize> for Cell {
    fn from(v: usize) -> Self {
        Cell::Int(v as u64)
    }
}

impl From<f64> for Cell {
    fn from(v: f64) -> Self {
        Cell::Real(v)
    }
}

impl From<String> for Cell {
    fn from(v: String) -> Self {
        Cell::Text(v)
    }
}

impl From<&str> for Cell {
    fn from(v: &str) -> Self {
        Cell::Text(v.to_owned())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(header: &[&str]) -> Self {
        Table {
            header: header.iter().map(|h| h.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    /// Appends columns to the header; rows pushed afterwards must supply them.
    pub fn extend_header(&mut self, extra: &[&str]) {
        self.header.extend(extra.iter().map(|h| h.to_string()));
    }

    pub fn push(&mut self, row: Vec<Cell>) {
        assert_eq!(row.len(), self.header.len(), "row width does not match the header");
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String, CliError> {
        let mut out = String::new();
        out.push_str(&self.header.join(","));
        out.push('\n');
        for (i, row) in self.rows.iter().enumerate() {
            for (j, cell) in row.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                match cell {
                    Cell::Int(v) => write!(out, "{v}").unwrap(),
                    Cell::Real(v) if v.is_finite() => write!(out, "{v:.16e}").unwrap(),
                    Cell::Real(v) => {
                        return Err(CliError::NonFinite {
                            column: self.header[j].clone(),
                            row: i + 1,
                            value: *v,
                        })
                    }
                    Cell::Text(s) => out.push_str(&quote(s)),
                }
            }
            out.push('\n');
        }
        Ok(out)
    }
}

fn quote(s: &str) -> String {
    if s.contains([',', '"', '\n', '\r']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_owned()
    }
}
