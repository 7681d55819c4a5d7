//! Minimal CSV assembly with stable float formatting.
//!
//! Cells are shortest-round-trip `Display` strings, so identical runs write
//! identical bytes; none of the emitted values need quoting.

use std::path::Path;

use crate::CliError;

pub struct Csv {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Csv {
    pub fn new(columns: &[&str]) -> Self {
        Self { header: columns.iter().map(|c| c.to_string()).collect(), rows: Vec::new() }
    }

    pub fn with_header(columns: Vec<String>) -> Self {
        Self { header: columns, rows: Vec::new() }
    }

    pub fn row(&mut self, cells: Vec<String>) {
        assert_eq!(cells.len(), self.header.len(), "row width must match header");
        self.rows.push(cells);
    }

    pub fn header(&self) -> &[String] {
        &self.header
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = self.header.join(",");
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<(), CliError> {
        std::fs::write(path, self.render())
            .map_err(|e| CliError::Usage(format!("cannot write {path:?}: {e}")))
    }
}

/// Shortest-round-trip rendering; `10` not `10.0`, `inf` for infinities.
pub fn num(x: f64) -> String {
    format!("{x}")
}
