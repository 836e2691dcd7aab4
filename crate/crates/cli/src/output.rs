//! Rendering of command results as text, CSV or JSON.

use std::io::Write;

use anyhow::Result;
use clap::ValueEnum;
use serde_json::{json, Value};

pub const SCHEMA: &str = "boolform/v1";

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Csv,
    Json,
}

/// A result: a table for text/CSV and a JSON document.
pub struct Report {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<String>>,
    pub json: Value,
    /// Plain single-value output used by text mode instead of the table.
    pub scalar: Option<String>,
}

impl Report {
    pub fn table(header: Vec<&'static str>, rows: Vec<Vec<String>>, mut json: Value) -> Report {
        if let Value::Object(m) = &mut json {
            m.insert("schema".into(), json!(SCHEMA));
        }
        Report { header, rows, json, scalar: None }
    }

    pub fn with_scalar(mut self, s: String) -> Report {
        self.scalar = Some(s);
        self
    }

    pub fn write(&self, format: Format, out: &mut impl Write) -> Result<()> {
        match format {
            Format::Json => {
                serde_json::to_writer_pretty(&mut *out, &self.json)?;
                writeln!(out)?;
            }
            Format::Csv => {
                let mut w = csv::Writer::from_writer(&mut *out);
                w.write_record(&self.header)?;
                for r in &self.rows {
                    w.write_record(r)?;
                }
                w.flush()?;
            }
            Format::Text => {
                if let Some(s) = &self.scalar {
                    writeln!(out, "{s}")?;
                    return Ok(());
                }
                let mut width: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (w, c) in width.iter_mut().zip(r) {
                        *w = (*w).max(c.chars().count());
                    }
                }
                let line = |cells: Vec<&str>| {
                    let parts: Vec<String> = cells.iter().zip(&width).map(|(c, w)| format!("{c:<w$}")).collect();
                    parts.join("  ").trim_end().to_string()
                };
                writeln!(out, "{}", line(self.header.clone()))?;
                for r in &self.rows {
                    writeln!(out, "{}", line(r.iter().map(String::as_str).collect()))?;
                }
            }
        }
        Ok(())
    }
}
