use std::fmt;
use std::fs::OpenOptions;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::config::Scale;
use crate::construction::ConstructionParams;
use crate::error::{param_err, Error, Result};
use crate::statistics::{MomentReport, Z_BAND};

/// How an entry's estimate is compared with its reference.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Check {
    /// `|z| ≤ band`; with zero standard error the values must be equal.
    ZBand { band: f64 },
    /// `|estimate - reference| ≤ tol`.
    Tolerance { tol: f64 },
    /// `estimate ≤ reference`.
    AtMost,
    /// `estimate ≥ reference`.
    AtLeast,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Verdict {
    Pass,
    Fail,
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Verdict::Pass => "pass",
            Verdict::Fail => "fail",
        })
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TestEntry {
    pub name: String,
    pub estimate: f64,
    pub std_error: f64,
    pub reference: f64,
    pub z_score: Option<f64>,
    pub check: Check,
    pub verdict: Verdict,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub note: Option<String>,
}

impl TestEntry {
    pub fn new(name: impl Into<String>, estimate: f64, std_error: f64, reference: f64, check: Check) -> Self {
        let mut entry = Self {
            name: name.into(),
            estimate,
            std_error,
            reference,
            z_score: None,
            check,
            verdict: Verdict::Fail,
            note: None,
        };
        entry.evaluate();
        entry
    }

    /// A Monte Carlo report against `reference` at the default band.
    pub fn z_band(name: impl Into<String>, report: &MomentReport, reference: f64) -> Self {
        Self::new(
            name,
            report.estimate,
            report.std_error,
            reference,
            Check::ZBand { band: Z_BAND },
        )
    }

    pub fn exact(name: impl Into<String>, value: f64, reference: f64, tol: f64) -> Self {
        Self::new(name, value, 0.0, reference, Check::Tolerance { tol })
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// Moves the reference by `delta` and re-evaluates the verdict.
    pub fn offset_reference(mut self, delta: f64) -> Self {
        self.reference += delta;
        self.evaluate();
        self
    }

    pub fn passed(&self) -> bool {
        self.verdict == Verdict::Pass
    }

    fn evaluate(&mut self) {
        let diff = self.estimate - self.reference;
        self.z_score = (self.std_error > 0.0).then(|| diff / self.std_error);
        let ok = match self.check {
            Check::ZBand { band } => match self.z_score {
                Some(z) => z.abs() <= band,
                None => diff == 0.0,
            },
            Check::Tolerance { tol } => diff.abs() <= tol,
            Check::AtMost => self.estimate <= self.reference,
            Check::AtLeast => self.estimate >= self.reference,
        };
        self.verdict = if ok { Verdict::Pass } else { Verdict::Fail };
    }
}

/// Outcome of one suite run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunRecord {
    pub suite: String,
    pub version: String,
    pub seed: u64,
    pub params: ConstructionParams,
    pub scale: Scale,
    pub reference_offset: f64,
    pub entries: Vec<TestEntry>,
    pub duration_secs: f64,
}

impl RunRecord {
    pub fn passed(&self) -> bool {
        self.entries.iter().all(TestEntry::passed)
    }

    pub fn failures(&self) -> impl Iterator<Item = &TestEntry> {
        self.entries.iter().filter(|e| !e.passed())
    }

    pub fn entry(&self, name: &str) -> Option<&TestEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    /// The record with its wall-clock duration zeroed, for comparisons.
    pub fn without_duration(&self) -> Self {
        Self {
            duration_secs: 0.0,
            ..self.clone()
        }
    }

    pub fn from_json(bytes: &[u8]) -> Result<Self> {
        Ok(serde_json::from_slice(bytes)?)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ReportFormat {
    Json,
    Csv,
    Text,
}

impl FromStr for ReportFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "json" => Ok(Self::Json),
            "csv" => Ok(Self::Csv),
            "text" => Ok(Self::Text),
            other => param_err(format!("unknown report format `{other}`; expected json, csv or text")),
        }
    }
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

pub fn emit_report(record: &RunRecord, format: ReportFormat) -> Result<Vec<u8>> {
    match format {
        ReportFormat::Json => {
            let mut out = serde_json::to_vec_pretty(record)?;
            out.push(b'\n');
            Ok(out)
        }
        ReportFormat::Csv => {
            let mut w = csv::Writer::from_writer(Vec::new());
            let io = |e: csv::Error| Error::Numeric(format!("csv encoding failed: {e}"));
            w.write_record(["test", "estimate", "std_error", "reference", "z_score", "verdict"])
                .map_err(io)?;
            for e in &record.entries {
                w.write_record([
                    e.name.clone(),
                    e.estimate.to_string(),
                    e.std_error.to_string(),
                    e.reference.to_string(),
                    opt(e.z_score),
                    e.verdict.to_string(),
                ])
                .map_err(io)?;
            }
            w.into_inner()
                .map_err(|e| Error::Numeric(format!("csv encoding failed: {e}")))
        }
        ReportFormat::Text => Ok(text_table(record).into_bytes()),
    }
}

fn text_table(record: &RunRecord) -> String {
    let p = &record.params;
    let mut out = format!(
        "suite {}  seed {}  version {}\nL={} level={} p={}  duration {:.2} s\n",
        record.suite,
        record.seed,
        record.version,
        p.arity(),
        p.level(),
        p.p(),
        record.duration_secs
    );
    let header = ["test", "estimate", "std_error", "reference", "z_score", "verdict"];
    let rows: Vec<[String; 6]> = record
        .entries
        .iter()
        .map(|e| {
            [
                e.name.clone(),
                format!("{:.6e}", e.estimate),
                format!("{:.3e}", e.std_error),
                format!("{:.6e}", e.reference),
                e.z_score.map(|z| format!("{z:+.3}")).unwrap_or_else(|| "-".into()),
                e.verdict.to_string(),
            ]
        })
        .collect();
    let mut widths = header.map(str::len);
    for row in &rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: [&str; 6]| {
        let mut s = format!("{:<w$}", cells[0], w = widths[0]);
        for (cell, w) in cells.iter().zip(widths).skip(1) {
            s.push_str(&format!("  {cell:>w$}"));
        }
        s.trim_end().to_string() + "\n"
    };
    out.push_str(&line(header));
    for row in &rows {
        out.push_str(&line([&row[0], &row[1], &row[2], &row[3], &row[4], &row[5]]));
    }
    let failed = record.failures().count();
    out.push_str(&format!(
        "{} passed, {} failed\n",
        record.entries.len() - failed,
        failed
    ));
    out
}

fn create_new(path: &Path, bytes: &[u8]) -> Result<bool> {
    match OpenOptions::new().write(true).create_new(true).open(path) {
        Ok(mut f) => {
            f.write_all(bytes).map_err(|source| Error::Output {
                path: path.to_path_buf(),
                source,
            })?;
            Ok(true)
        }
        Err(e) if e.kind() == std::io::ErrorKind::AlreadyExists => Ok(false),
        Err(source) => Err(Error::Output {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Writes `<suite>-<timestamp>-<seed>.{json,csv}` into `dir`. Existing
/// files are never replaced; a numeric suffix disambiguates collisions.
pub fn persist_record(record: &RunRecord, dir: &Path) -> Result<[PathBuf; 2]> {
    std::fs::create_dir_all(dir).map_err(|source| Error::Output {
        path: dir.to_path_buf(),
        source,
    })?;
    let json = emit_report(record, ReportFormat::Json)?;
    let csv = emit_report(record, ReportFormat::Csv)?;
    let stamp = chrono::Utc::now().format("%Y%m%dT%H%M%S%.3fZ");
    for attempt in 0u32.. {
        let suffix = if attempt == 0 {
            String::new()
        } else {
            format!("_{attempt}")
        };
        let stem = format!("{}-{stamp}{suffix}-{}", record.suite, record.seed);
        let json_path = dir.join(format!("{stem}.json"));
        let csv_path = dir.join(format!("{stem}.csv"));
        if csv_path.exists() || !create_new(&json_path, &json)? {
            continue;
        }
        if !create_new(&csv_path, &csv)? {
            std::fs::remove_file(&json_path).map_err(|source| Error::Output {
                path: json_path.clone(),
                source,
            })?;
            continue;
        }
        return Ok([json_path, csv_path]);
    }
    unreachable!("suffix space exhausted")
}
