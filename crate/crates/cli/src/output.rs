//! CSV rows and the JSON summary.

use std::io::Write;

use nonlocal_bbm::limits::{AuditReport, RateFit, SweepReport};
use serde::{Deserialize, Serialize};

pub const SUMMARY_VERSION: u32 = 1;

pub const COLUMNS: [&str; 9] = [
    "case_id",
    "alpha",
    "point",
    "value",
    "error_estimate",
    "target",
    "abs_error",
    "rel_error",
    "pass",
];

/// One CSV line; `None` cells are written empty.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Row {
    pub case_id: String,
    pub alpha: Option<f64>,
    pub point: Option<Vec<f64>>,
    pub value: Option<f64>,
    pub error_estimate: Option<f64>,
    pub target: Option<f64>,
    pub abs_error: Option<f64>,
    pub rel_error: Option<f64>,
    pub pass: Option<bool>,
}

/// 17 significant digits in scientific notation.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

pub fn fmt_point(p: &[f64]) -> String {
    p.iter().map(|&c| fmt_f64(c)).collect::<Vec<_>>().join(";")
}

impl Row {
    pub fn cells(&self) -> [String; 9] {
        let num = |v: Option<f64>| v.map(fmt_f64).unwrap_or_default();
        [
            self.case_id.clone(),
            num(self.alpha),
            self.point.as_deref().map(fmt_point).unwrap_or_default(),
            num(self.value),
            num(self.error_estimate),
            num(self.target),
            num(self.abs_error),
            num(self.rel_error),
            self.pass.map(|b| b.to_string()).unwrap_or_default(),
        ]
    }
}

pub fn write_csv<W: Write>(out: W, rows: &[Row]) -> csv::Result<()> {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(out);
    w.write_record(COLUMNS)?;
    for r in rows {
        w.write_record(r.cells())?;
    }
    w.flush()?;
    Ok(())
}

/// A named constant with its quadrature cross-check.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConstantEntry {
    pub case_id: String,
    pub value: f64,
    /// Gap to an independent quadrature, zero when none applies.
    pub error_estimate: f64,
}

/// One raw operator value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalEntry {
    pub case_id: String,
    pub alpha: Option<f64>,
    pub point: Option<Vec<f64>>,
    pub value: f64,
    pub error_estimate: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Case {
    Constants { entries: Vec<ConstantEntry> },
    Eval { entries: Vec<EvalEntry> },
    Sweep(SweepReport),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitEntry {
    pub case_id: String,
    pub point: Option<Vec<f64>>,
    pub fit: RateFit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Summary {
    pub version: u32,
    pub config_hash: String,
    pub cases: Vec<Case>,
    pub fits: Vec<FitEntry>,
    pub audits: Vec<AuditReport>,
}

impl Summary {
    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("summary serializes");
        s.push('\n');
        s
    }
}
