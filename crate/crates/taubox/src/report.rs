//! CSV report assembly. Reports are built fully in memory and written with a
//! single filesystem call, so a failing run never leaves a partial file.
//! Floats print in Rust's shortest round-trip form; identical configurations
//! produce byte-identical reports regardless of worker count.

use std::path::Path;

use crate::error::{Error, Result};

/// Shortest decimal form that parses back to exactly the same f64.
pub fn fmt_f64(v: f64) -> String {
    format!("{v}")
}

#[derive(Clone, Debug, Default)]
pub struct Report {
    meta: Vec<(String, String)>,
    columns: Vec<String>,
    rows: Vec<Vec<String>>,
    footer: Vec<(String, String)>,
}

impl Report {
    pub fn new() -> Self {
        Report {
            meta: vec![(
                "taubox".to_string(),
                format!("v{}", env!("CARGO_PKG_VERSION")),
            )],
            ..Default::default()
        }
    }

    pub fn meta(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.meta.push((key.to_string(), value.to_string()));
        self
    }

    pub fn columns(&mut self, names: &[&str]) -> &mut Self {
        self.columns = names.iter().map(|s| s.to_string()).collect();
        self
    }

    pub fn row(&mut self, cells: Vec<String>) -> &mut Self {
        debug_assert_eq!(cells.len(), self.columns.len());
        self.rows.push(cells);
        self
    }

    pub fn footer(&mut self, key: &str, value: impl std::fmt::Display) -> &mut Self {
        self.footer.push((key.to_string(), value.to_string()));
        self
    }

    pub fn row_count(&self) -> usize {
        self.rows.len()
    }

    pub fn render(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.meta {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out.push_str(&self.columns.join(","));
        out.push('\n');
        for row in &self.rows {
            out.push_str(&row.join(","));
            out.push('\n');
        }
        for (k, v) in &self.footer {
            out.push_str(&format!("# {k} = {v}\n"));
        }
        out
    }

    pub fn write(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.render()).map_err(|e| {
            Error::InvalidArgument(format!("cannot write report to {}: {e}", path.display()))
        })
    }
}
