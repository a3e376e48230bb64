//! In-memory tables and deterministic CSV emission.
//!
//! CSV is the source of truth for every command: UTF-8, header row, `.`
//! decimal separator, scientific notation with ten significant digits.
//! Identical inputs must produce byte-identical files.

use crate::CliError;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

#[derive(Debug, Clone, PartialEq)]
pub enum Cell {
    Num(f64),
    Text(String),
}

impl Cell {
    fn render(&self) -> String {
        match self {
            Cell::Num(v) => format!("{v:.9e}"),
            Cell::Text(t) => t.clone(),
        }
    }

    fn as_num(&self) -> Option<f64> {
        match self {
            Cell::Num(v) => Some(*v),
            Cell::Text(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<Cell>) {
        debug_assert_eq!(row.len(), self.columns.len());
        self.rows.push(row);
    }

    pub fn column_index(&self, name: &str) -> Result<usize, CliError> {
        self.columns
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| CliError::Plot(format!("missing column '{name}'")))
    }

    /// Numeric values of one column; text cells are skipped by value.
    pub fn numeric_column(&self, name: &str) -> Result<Vec<f64>, CliError> {
        let idx = self.column_index(name)?;
        Ok(self
            .rows
            .iter()
            .filter_map(|row| row[idx].as_num())
            .collect())
    }

    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            let mut first = true;
            for cell in row {
                if !first {
                    out.push(',');
                }
                let _ = write!(out, "{}", cell.render());
                first = false;
            }
            out.push('\n');
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), CliError> {
        fs::write(path, self.to_csv())
            .map_err(|e| CliError::Io(format!("writing {}: {e}", path.display())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_layout_and_precision() {
        let mut t = Table::new(&["depth_m", "kind"]);
        t.push_row(vec![Cell::Num(0.123456789123), Cell::Text("low".into())]);
        let csv = t.to_csv();
        assert_eq!(csv, "depth_m,kind\n1.234567891e-1,low\n");
    }

    #[test]
    fn missing_column_is_named() {
        let t = Table::new(&["a"]);
        let err = t.column_index("b").unwrap_err();
        assert!(err.to_string().contains("'b'"));
    }
}
