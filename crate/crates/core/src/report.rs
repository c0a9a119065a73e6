//! Check records, CSV tables and the JSON summary.

use std::fs;
use std::path::Path;

use serde::Serialize;

use crate::config::CheckId;
use crate::error::{Error, Result};
use crate::numerics::Tolerances;

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Provenance {
    /// Exact formula (closed-form kernel, Gamma norms, coefficient formula).
    ClosedForm,
    /// Fixed numerical threshold or a value calibrated within the run.
    Calibration,
    /// Rate or ratio measured against the same computation at other levels.
    SelfConsistencySlope,
}

impl Provenance {
    pub fn as_str(self) -> &'static str {
        match self {
            Provenance::ClosedForm => "closed-form",
            Provenance::Calibration => "calibration",
            Provenance::SelfConsistencySlope => "self-consistency-slope",
        }
    }
}

/// How `measured` is compared with `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Comparison {
    /// `|measured − reference| ≤ tol`
    Absolute { tol: f64 },
    /// `|measured − reference| ≤ tol·|reference|`
    Relative { tol: f64 },
    /// `measured ≤ reference`
    AtMost,
    /// `measured ≥ reference`
    AtLeast,
    /// `measured > reference`
    Greater,
    /// `measured < reference`
    Less,
    /// `lo ≤ measured ≤ hi`
    Within { lo: f64, hi: f64 },
    /// Reported only.
    Info,
}

impl Comparison {
    pub fn passes(&self, measured: f64, reference: f64) -> bool {
        match *self {
            Comparison::Absolute { tol } => (measured - reference).abs() <= tol,
            Comparison::Relative { tol } => (measured - reference).abs() <= tol * reference.abs(),
            Comparison::AtMost => measured <= reference,
            Comparison::AtLeast => measured >= reference,
            Comparison::Greater => measured > reference,
            Comparison::Less => measured < reference,
            Comparison::Within { lo, hi } => lo <= measured && measured <= hi,
            Comparison::Info => true,
        }
    }

    pub fn describe(&self) -> String {
        match *self {
            Comparison::Absolute { tol } => format!("abs<={tol:e}"),
            Comparison::Relative { tol } => format!("rel<={tol:e}"),
            Comparison::AtMost => "<=ref".into(),
            Comparison::AtLeast => ">=ref".into(),
            Comparison::Greater => ">ref".into(),
            Comparison::Less => "<ref".into(),
            Comparison::Within { lo, hi } => format!("in[{lo},{hi}]"),
            Comparison::Info => "info".into(),
        }
    }
}

/// One numeric comparison.
#[derive(Debug, Clone, Serialize)]
pub struct Measurement {
    pub name: String,
    pub measured: f64,
    pub reference: f64,
    pub provenance: Provenance,
    pub comparison: Comparison,
    pub passed: bool,
}

impl Measurement {
    pub fn new(name: impl Into<String>, measured: f64, reference: f64, provenance: Provenance, comparison: Comparison) -> Self {
        let passed = comparison.passes(measured, reference);
        Self { name: name.into(), measured, reference, provenance, comparison, passed }
    }

    /// A boolean property, recorded as 1 (holds) against reference 1.
    pub fn holds(name: impl Into<String>, ok: bool) -> Self {
        Self::new(name, if ok { 1.0 } else { 0.0 }, 1.0, Provenance::ClosedForm, Comparison::AtLeast)
    }

    pub fn info(name: impl Into<String>, measured: f64, provenance: Provenance) -> Self {
        Self::new(name, measured, f64::NAN, provenance, Comparison::Info)
    }
}

/// A plot-ready numeric table.
#[derive(Debug, Clone, Serialize)]
pub struct Table {
    pub name: String,
    pub headers: Vec<String>,
    pub rows: Vec<Vec<String>>,
}

/// Fixed formatting so repeated runs give identical bytes.
pub fn num(v: f64) -> String {
    if v.is_nan() {
        "nan".into()
    } else {
        format!("{v:.15e}")
    }
}

impl Table {
    pub fn new(name: impl Into<String>, headers: &[&str]) -> Self {
        Self { name: name.into(), headers: headers.iter().map(|s| s.to_string()).collect(), rows: Vec::new() }
    }

    pub fn push(&mut self, row: Vec<String>) {
        debug_assert_eq!(row.len(), self.headers.len());
        self.rows.push(row);
    }

    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let io = |e: csv::Error| Error::Io(std::io::Error::other(e));
        w.write_record(&self.headers).map_err(io)?;
        for r in &self.rows {
            w.write_record(r).map_err(io)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::Io(std::io::Error::other(e.to_string())))?;
        String::from_utf8(bytes).map_err(|e| Error::Io(std::io::Error::other(e)))
    }
}

/// The comparison list as a table (one row per measurement).
pub fn measurement_table(name: &str, ms: &[Measurement]) -> Table {
    let mut t = Table::new(name, &["name", "measured", "reference", "provenance", "tolerance", "passed"]);
    for m in ms {
        t.push(vec![
            m.name.clone(),
            num(m.measured),
            num(m.reference),
            m.provenance.as_str().into(),
            m.comparison.describe(),
            m.passed.to_string(),
        ]);
    }
    t
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Pass,
    Fail,
    ConfigError,
    NumericalError,
}

#[derive(Debug, Clone, Serialize)]
pub struct CheckRecord {
    pub id: CheckId,
    pub status: Status,
    pub error: Option<String>,
    pub measurements: Vec<Measurement>,
    #[serde(skip)]
    pub tables: Vec<Table>,
    pub table_files: Vec<String>,
    pub seconds: f64,
}

impl CheckRecord {
    pub fn from_measurements(id: CheckId, measurements: Vec<Measurement>, tables: Vec<Table>, seconds: f64) -> Self {
        let status = if measurements.iter().all(|m| m.passed) { Status::Pass } else { Status::Fail };
        Self { id, status, error: None, measurements, tables, table_files: Vec::new(), seconds }
    }

    pub fn from_error(id: CheckId, e: &Error, seconds: f64) -> Self {
        let status = if e.is_numerical() { Status::NumericalError } else { Status::ConfigError };
        Self { id, status, error: Some(e.to_string()), measurements: Vec::new(), tables: Vec::new(), table_files: Vec::new(), seconds }
    }

    pub fn verdict_line(&self) -> String {
        let failed = self.measurements.iter().filter(|m| !m.passed).count();
        match self.status {
            Status::Pass => format!("PASS  {:<14} {} comparisons", self.id.as_str(), self.measurements.len()),
            Status::Fail => format!(
                "FAIL  {:<14} {failed}/{} comparisons failed: {}",
                self.id.as_str(),
                self.measurements.len(),
                self.measurements.iter().filter(|m| !m.passed).map(|m| m.name.as_str()).collect::<Vec<_>>().join(", ")
            ),
            Status::ConfigError | Status::NumericalError => {
                format!("ERROR {:<14} {}", self.id.as_str(), self.error.as_deref().unwrap_or(""))
            }
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct Environment {
    pub version: &'static str,
    pub tolerances: Tolerances,
    pub threads: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub status: Status,
    pub environment: Environment,
    pub config: serde_json::Value,
    pub checks: Vec<CheckRecord>,
}

impl Report {
    pub fn new(environment: Environment, config: serde_json::Value, checks: Vec<CheckRecord>) -> Self {
        let status = overall_status(&checks);
        Self { status, environment, config, checks }
    }

    /// Writes `summary.json` and one CSV per table; fills `table_files`.
    pub fn write(&mut self, dir: &Path) -> Result<()> {
        fs::create_dir_all(dir)?;
        for rec in &mut self.checks {
            rec.table_files.clear();
            for t in &rec.tables {
                let file = format!("{}.csv", t.name);
                fs::write(dir.join(&file), t.to_csv()?)?;
                rec.table_files.push(file);
            }
        }
        let json = serde_json::to_string_pretty(self).map_err(|e| Error::Io(std::io::Error::other(e)))?;
        fs::write(dir.join("summary.json"), json)?;
        Ok(())
    }

    /// 0 all pass, 1 a check failed, 2 configuration error, 3 numerical failure.
    pub fn exit_code(&self) -> i32 {
        exit_code(self.status)
    }
}

pub fn overall_status(checks: &[CheckRecord]) -> Status {
    let has = |s: Status| checks.iter().any(|c| c.status == s);
    if has(Status::ConfigError) {
        Status::ConfigError
    } else if has(Status::NumericalError) {
        Status::NumericalError
    } else if has(Status::Fail) {
        Status::Fail
    } else {
        Status::Pass
    }
}

pub fn exit_code(status: Status) -> i32 {
    match status {
        Status::Pass => 0,
        Status::Fail => 1,
        Status::ConfigError => 2,
        Status::NumericalError => 3,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comparisons() {
        assert!(Comparison::Relative { tol: 0.05 }.passes(1.04, 1.0));
        assert!(!Comparison::Relative { tol: 0.05 }.passes(1.06, 1.0));
        assert!(Comparison::Within { lo: 1.4, hi: 2.8 }.passes(2.0, f64::NAN));
        assert!(!Comparison::AtMost.passes(f64::NAN, 1.0));
        assert!(Measurement::info("x", 3.0, Provenance::Calibration).passed);
    }

    #[test]
    fn csv_is_stable() {
        let mut t = Table::new("t", &["p", "e0"]);
        t.push(vec!["16".into(), num(0.1)]);
        assert_eq!(t.to_csv().unwrap(), "p,e0\n16,1.000000000000000e-1\n");
    }

    #[test]
    fn status_priority() {
        let ok = CheckRecord::from_measurements(CheckId::Space, vec![], vec![], 0.0);
        let fail = CheckRecord::from_measurements(
            CheckId::Norm,
            vec![Measurement::new("x", 2.0, 1.0, Provenance::ClosedForm, Comparison::AtMost)],
            vec![],
            0.0,
        );
        let num_err = CheckRecord::from_error(CheckId::Space, &Error::Convergence("x".into()), 0.0);
        assert_eq!(overall_status(std::slice::from_ref(&ok)), Status::Pass);
        assert_eq!(overall_status(&[ok.clone(), fail.clone()]), Status::Fail);
        assert_eq!(overall_status(&[fail, num_err]), Status::NumericalError);
        assert_eq!(exit_code(Status::ConfigError), 2);
    }
}
