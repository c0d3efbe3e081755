//! Reports: one record per check, written as JSON or CSV.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::Serialize;
use serde_json::{json, Value};

use crate::error::{Error, Result};

use super::config::{ExperimentConfig, Kind};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Record {
    /// Anchor into the claim index.
    pub claim: &'static str,
    /// What was checked, e.g. `a=1/4 w=3`.
    pub check: String,
    pub kind: String,
    /// Exact checks decide the verdict by exact comparison; their tolerance is 0.
    pub exact: bool,
    pub value: Option<f64>,
    pub expected: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
    /// `code: message` when the module reported an error.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

impl Record {
    pub fn exact(kind: Kind, claim: &'static str, check: impl Into<String>, value: f64, expected: f64, pass: bool) -> Self {
        Self {
            claim,
            check: check.into(),
            kind: kind.to_string(),
            exact: true,
            value: Some(value),
            expected: Some(expected),
            tolerance: 0.0,
            pass,
            error: None,
        }
    }

    /// Passes when `|value - expected| <= tolerance`.
    pub fn within(
        kind: Kind,
        claim: &'static str,
        check: impl Into<String>,
        value: f64,
        expected: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            claim,
            check: check.into(),
            kind: kind.to_string(),
            exact: false,
            value: Some(value),
            expected: Some(expected),
            tolerance,
            pass: (value - expected).abs() <= tolerance,
            error: None,
        }
    }

    pub fn failure(kind: Kind, claim: &'static str, check: impl Into<String>, err: &Error) -> Self {
        Self {
            claim,
            check: check.into(),
            kind: kind.to_string(),
            exact: true,
            value: None,
            expected: None,
            tolerance: 0.0,
            pass: false,
            error: Some(format!("{}: {err}", err.code())),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Report {
    pub config: Value,
    pub seed: u64,
    pub records: Vec<Record>,
}

impl Report {
    pub fn new(config: &ExperimentConfig) -> Self {
        Self { config: config.to_json(), seed: config.seed, records: Vec::new() }
    }

    pub fn push(&mut self, r: Record) {
        self.records.push(r);
    }

    pub fn all_pass(&self) -> bool {
        self.records.iter().all(|r| r.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Record> {
        self.records.iter().filter(|r| !r.pass)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Format {
    #[default]
    Json,
    Csv,
}

impl FromStr for Format {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "json" => Ok(Format::Json),
            "csv" => Ok(Format::Csv),
            other => Err(crate::error::invalid(format!("unknown format `{other}`"))),
        }
    }
}

impl fmt::Display for Format {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Format::Json => "json",
            Format::Csv => "csv",
        })
    }
}

/// Seconds since the epoch, or `SOURCE_DATE_EPOCH` when set.
fn timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or_else(|| {
            std::time::SystemTime::now()
                .duration_since(std::time::UNIX_EPOCH)
                .map_or(0, |d| d.as_secs())
        })
}

pub fn to_json(report: &Report) -> Value {
    json!({
        "config": report.config,
        "records": report.records,
        "meta": {
            "version": env!("CARGO_PKG_VERSION"),
            "seed": report.seed,
            "timestamp": timestamp(),
        },
    })
}

pub const CSV_HEADER: &str = "claim_anchor,kind,exact_flag,value,expected,tolerance,verdict,seed,check";

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn csv_number(x: Option<f64>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

pub fn to_csv(report: &Report) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for r in &report.records {
        let row = [
            r.claim.to_string(),
            r.kind.clone(),
            r.exact.to_string(),
            csv_number(r.value),
            csv_number(r.expected),
            r.tolerance.to_string(),
            if r.pass { "pass" } else { "fail" }.to_string(),
            report.seed.to_string(),
            r.check.clone(),
        ];
        let fields: Vec<String> = row.iter().map(|f| csv_field(f)).collect();
        out.push_str(&fields.join(","));
        out.push('\n');
    }
    out
}

pub fn render(report: &Report, format: Format) -> String {
    match format {
        Format::Json => {
            let mut s = serde_json::to_string_pretty(&to_json(report)).expect("report serializes");
            s.push('\n');
            s
        }
        Format::Csv => to_csv(report),
    }
}

pub fn emit_report(report: &Report, format: Format, path: &Path) -> Result<()> {
    std::fs::write(path, render(report, format)).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}
