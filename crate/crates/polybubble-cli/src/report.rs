//! Check rows, optional data tables, and their CSV/JSON serialisation.

use std::fs;
use std::path::Path;

use serde::Serialize;
use sha2::{Digest, Sha256};

/// Bumped whenever CSV columns change.
pub const SCHEMA_VERSION: &str = "polybubble-report/1";

pub const CHECK_COLUMNS: [&str; 11] =
    ["schema", "check", "inputs", "value", "predicted", "tolerance", "comparison", "pass", "config_sha256", "seed", "version"];

#[derive(Debug, Clone, Copy, Serialize, PartialEq, Eq)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|value - predicted| <= tolerance`.
    Abs,
    /// `|value / predicted - 1| <= tolerance`.
    Rel,
    /// `value <= predicted + tolerance`.
    AtMost,
}

impl Comparison {
    fn as_str(self) -> &'static str {
        match self {
            Comparison::Abs => "abs",
            Comparison::Rel => "rel",
            Comparison::AtMost => "at_most",
        }
    }

    pub fn passes(self, value: f64, predicted: f64, tol: f64) -> bool {
        match self {
            Comparison::Abs => (value - predicted).abs() <= tol,
            Comparison::Rel => (value / predicted - 1.0).abs() <= tol,
            Comparison::AtMost => value <= predicted + tol,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRow {
    pub check: String,
    pub inputs: String,
    pub value: f64,
    pub predicted: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct Provenance {
    pub config_sha256: String,
    pub seed: u64,
    pub version: String,
}

impl Provenance {
    pub fn new(config_text: &str, seed: u64) -> Self {
        Self {
            config_sha256: hex::encode(Sha256::digest(config_text.as_bytes())),
            seed,
            version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub columns: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub schema: &'static str,
    pub command: String,
    pub provenance: Provenance,
    pub checks: Vec<CheckRow>,
    pub tables: Vec<Table>,
    /// Set when a reduced solve did not converge.
    #[serde(skip)]
    pub nonconverged: bool,
}

impl Report {
    pub fn new(command: &str, provenance: Provenance) -> Self {
        Self { schema: SCHEMA_VERSION, command: command.into(), provenance, checks: vec![], tables: vec![], nonconverged: false }
    }

    pub fn check(&mut self, check: &str, inputs: impl Into<String>, value: f64, predicted: f64, tolerance: f64, cmp: Comparison) {
        let pass = cmp.passes(value, predicted, tolerance);
        self.checks.push(CheckRow { check: check.into(), inputs: inputs.into(), value, predicted, tolerance, comparison: cmp, pass });
    }

    pub fn all_pass(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    /// Writes `<command>.csv`, `<command>.json` and one `<command>_<table>.csv` per table.
    pub fn write(&self, dir: &Path) -> std::io::Result<()> {
        fs::create_dir_all(dir)?;
        let mut w = csv::Writer::from_path(dir.join(format!("{}.csv", self.command)))?;
        w.write_record(CHECK_COLUMNS)?;
        for c in &self.checks {
            w.write_record([
                self.schema.to_string(),
                c.check.clone(),
                c.inputs.clone(),
                c.value.to_string(),
                c.predicted.to_string(),
                c.tolerance.to_string(),
                c.comparison.as_str().to_string(),
                c.pass.to_string(),
                self.provenance.config_sha256.clone(),
                self.provenance.seed.to_string(),
                self.provenance.version.clone(),
            ])?;
        }
        w.flush()?;
        for t in &self.tables {
            let mut w = csv::Writer::from_path(dir.join(format!("{}_{}.csv", self.command, t.name)))?;
            w.write_record(&t.columns)?;
            for r in &t.rows {
                w.write_record(r)?;
            }
            w.flush()?;
        }
        let json = serde_json::to_string_pretty(self).map_err(std::io::Error::other)?;
        fs::write(dir.join(format!("{}.json", self.command)), json + "\n")
    }

    pub fn summary(&self) -> String {
        let mut s = String::new();
        for c in &self.checks {
            s.push_str(&format!(
                "{} {} [{}] value={} predicted={} tol={} ({})\n",
                if c.pass { "PASS" } else { "FAIL" },
                c.check,
                c.inputs,
                c.value,
                c.predicted,
                c.tolerance,
                c.comparison.as_str()
            ));
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Comparison::Abs.passes(1.0, 1.05, 0.1));
        assert!(!Comparison::Rel.passes(1.0, 2.0, 0.1));
        assert!(Comparison::AtMost.passes(-2.0, -1.5, 0.0));
        assert!(!Comparison::AtMost.passes(-1.0, -1.5, 0.15));
        assert!(!Comparison::Abs.passes(f64::NAN, 0.0, 1.0));
    }

    #[test]
    fn provenance_hash_is_stable() {
        let p = Provenance::new("n = 6\n", 1);
        assert_eq!(p.config_sha256.len(), 64);
        assert_eq!(p.config_sha256, Provenance::new("n = 6\n", 9).config_sha256);
    }
}
