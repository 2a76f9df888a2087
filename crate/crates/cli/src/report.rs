//! Report assembly and rendering.
//!
//! JSON is the canonical machine format; CSV is a flat projection for
//! plotting; the table form is for terminals. Reports carry the effective
//! calibration so every number is traceable to configuration, and contain
//! no timestamps: identical (config, seed) pairs render byte-identically.

use dpusim::config::SimConfig;
use serde::Serialize;
use std::io::Write;
use std::path::Path;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Table,
    Json,
    Csv,
}

impl std::str::FromStr for Format {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "table" => Ok(Format::Table),
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(format!("unknown format '{other}' (table|json|csv)")),
        }
    }
}

/// Envelope around one subcommand's results.
#[derive(Debug, Serialize)]
pub struct Report<T: Serialize> {
    pub command: &'static str,
    pub seed: u64,
    /// Effective calibration constants used for every figure in `cases`.
    pub calibration: SimConfig,
    pub cases: T,
}

/// Rendering hooks a subcommand's result type provides.
pub trait Render {
    fn table(&self, out: &mut String);
    /// Flat rows; the first row is the header.
    fn csv(&self) -> Vec<Vec<String>>;
}

impl<T: Serialize + Render> Report<T> {
    pub fn render(&self, format: Format) -> String {
        match format {
            Format::Json => {
                let mut s = serde_json::to_string_pretty(self).expect("serializable report");
                s.push('\n');
                s
            }
            Format::Csv => {
                let mut s = String::new();
                for row in self.cases.csv() {
                    s.push_str(&row.join(","));
                    s.push('\n');
                }
                s
            }
            Format::Table => {
                let mut s = String::new();
                s.push_str(&format!("# {} (seed {})\n", self.command, self.seed));
                self.cases.table(&mut s);
                s
            }
        }
    }

    pub fn emit(&self, format: Format, out: Option<&Path>) -> std::io::Result<()> {
        let text = self.render(format);
        match out {
            Some(path) => std::fs::write(path, text),
            None => std::io::stdout().write_all(text.as_bytes()),
        }
    }
}

pub fn fmt_f(v: f64) -> String {
    format!("{v:.4}")
}
