//! Measured rows, declared thresholds and verdicts for one experiment.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;

/// One measured case: parameters, both sides of the inequality and their ratio.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Row {
    pub params: Vec<f64>,
    pub lhs: f64,
    pub rhs: f64,
    pub ratio: f64,
}

impl Row {
    /// `ratio = lhs / rhs`; `rhs` must be positive.
    pub fn new(params: Vec<f64>, lhs: f64, rhs: f64) -> Self {
        assert!(rhs > 0.0, "rhs must be positive, got {rhs}");
        Row {
            params,
            lhs,
            rhs,
            ratio: lhs / rhs,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    AtMost,
    AtLeast,
}

/// A declared threshold and the measured value it was compared against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub value: f64,
    pub comparison: Comparison,
    pub threshold: f64,
    pub pass: bool,
}

impl Check {
    pub fn at_most(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            comparison: Comparison::AtMost,
            threshold,
            pass: value <= threshold,
        }
    }

    pub fn at_least(name: &str, value: f64, threshold: f64) -> Self {
        Check {
            name: name.to_string(),
            value,
            comparison: Comparison::AtLeast,
            threshold,
            pass: value >= threshold,
        }
    }

    /// Recomputes `pass` from the stored value and threshold.
    pub fn holds(&self) -> bool {
        match self.comparison {
            Comparison::AtMost => self.value <= self.threshold,
            Comparison::AtLeast => self.value >= self.threshold,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    pub seed: u64,
    pub grid: usize,
    pub time_steps: Option<usize>,
    pub operator: Option<String>,
    pub settings: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub experiment: String,
    pub param_names: Vec<String>,
    pub rows: Vec<Row>,
    pub fits: BTreeMap<String, f64>,
    pub checks: Vec<Check>,
    pub notes: Vec<String>,
    pub provenance: Provenance,
}

impl EstimateReport {
    pub fn new(experiment: &str, param_names: &[&str], provenance: Provenance) -> Self {
        EstimateReport {
            experiment: experiment.to_string(),
            param_names: param_names.iter().map(|s| s.to_string()).collect(),
            rows: Vec::new(),
            fits: BTreeMap::new(),
            checks: Vec::new(),
            notes: Vec::new(),
            provenance,
        }
    }

    pub fn push(&mut self, row: Row) {
        assert_eq!(row.params.len(), self.param_names.len(), "row shape");
        self.rows.push(row);
    }

    pub fn fit(&mut self, name: &str, value: f64) {
        self.fits.insert(name.to_string(), value);
    }

    pub fn check(&mut self, check: Check) {
        self.checks.push(check);
    }

    pub fn note(&mut self, text: impl Into<String>) {
        self.notes.push(text.into());
    }

    /// True when every declared check holds.
    pub fn verdict(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::holds)
    }

    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.holds()).collect()
    }

    /// Rows whose parameter `name` equals `value`.
    pub fn rows_where(&self, name: &str, value: f64) -> Vec<&Row> {
        let i = self
            .param_names
            .iter()
            .position(|p| p == name)
            .unwrap_or_else(|| panic!("no parameter {name}"));
        self.rows.iter().filter(|r| r.params[i] == value).collect()
    }

    pub fn csv_header(&self) -> String {
        let mut h = String::from("experiment");
        for p in &self.param_names {
            h.push(',');
            h.push_str(p);
        }
        h.push_str(",lhs,rhs,ratio");
        h
    }

    /// CSV with columns `experiment, params..., lhs, rhs, ratio`.
    pub fn to_csv(&self) -> String {
        let mut out = self.csv_header();
        out.push('\n');
        for row in &self.rows {
            out.push_str(&self.experiment);
            for p in &row.params {
                let _ = write!(out, ",{p}");
            }
            let _ = writeln!(out, ",{},{},{}", row.lhs, row.rhs, row.ratio);
        }
        out
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        w.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    /// JSON summary: fits, checks, verdict, notes and provenance (no rows).
    pub fn summary_json(&self) -> serde_json::Value {
        serde_json::json!({
            "experiment": self.experiment,
            "verdict": if self.verdict() { "pass" } else { "fail" },
            "fits": self.fits,
            "checks": self.checks,
            "notes": self.notes,
            "rows": self.rows.len(),
            "provenance": self.provenance,
        })
    }

    /// One line per check, for terminals and logs.
    pub fn describe(&self) -> String {
        let mut out = format!(
            "{}: {} ({} rows)\n",
            self.experiment,
            if self.verdict() { "PASS" } else { "FAIL" },
            self.rows.len()
        );
        for c in &self.checks {
            let op = match c.comparison {
                Comparison::AtMost => "<=",
                Comparison::AtLeast => ">=",
            };
            let _ = writeln!(
                out,
                "  [{}] {} = {:.6e} {op} {}",
                if c.holds() { "ok" } else { "FAIL" },
                c.name,
                c.value,
                c.threshold
            );
        }
        for (k, v) in &self.fits {
            let _ = writeln!(out, "  {k} = {v:.6e}");
        }
        for n in &self.notes {
            let _ = writeln!(out, "  note: {n}");
        }
        out
    }
}
