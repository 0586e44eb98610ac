//! Experiment orchestration: configs, the fixed suite catalog, run records
//! and reports.

mod config;
mod record;
mod suites;

use std::fmt;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use config::{ExperimentConfig, Scale, DEFAULT_SEED};
pub use record::{emit_report, persist_record, Check, ReportFormat, RunRecord, TestEntry, Verdict};
pub use suites::{
    EQUIDISTRIBUTION_TOL, GAUSSIAN_SETTLING_INDEX_L6, GAUSSIAN_TOL, KS_ALPHA, KS_WINDOW,
    LEAST_EQUIDISTRIBUTED_TRIALS_MOD6, SUITES,
};

fn pool(workers: usize) -> Result<rayon::ThreadPool> {
    rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::Parameter(format!("cannot start {workers} workers: {e}")))
}

/// Runs one suite of the catalog and, when `config.output` is set, writes
/// its record there under a fresh name.
pub fn run_experiment(config: &ExperimentConfig, suite: &str) -> Result<RunRecord> {
    config.validate()?;
    if !SUITES.contains(&suite) {
        return Err(Error::UnknownSuite(suite.to_string()));
    }
    let start = Instant::now();
    let mut entries = pool(config.workers)?.install(|| suites::run_suite(config, suite))?;
    if config.reference_offset != 0.0 {
        entries = entries
            .into_iter()
            .map(|e| e.offset_reference(config.reference_offset))
            .collect();
    }
    let record = RunRecord {
        suite: suite.to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.params.seed(),
        params: config.params,
        scale: config.scale.clone(),
        reference_offset: config.reference_offset,
        entries,
        duration_secs: start.elapsed().as_secs_f64(),
    };
    if let Some(dir) = &config.output {
        persist_record(&record, dir)?;
    }
    Ok(record)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SuiteSummary {
    pub suite: String,
    pub passed: usize,
    pub failed: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerifySummary {
    /// 0 when every test passed, 1 otherwise.
    pub status: i32,
    pub suites: Vec<SuiteSummary>,
    pub records: Vec<RunRecord>,
}

impl VerifySummary {
    pub fn total_tests(&self) -> usize {
        self.suites.iter().map(|s| s.passed + s.failed).sum()
    }
}

impl fmt::Display for VerifySummary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (s, r) in self.suites.iter().zip(&self.records) {
            writeln!(
                f,
                "{:<12} {:>3} passed {:>3} failed  ({:.1} s)",
                s.suite, s.passed, s.failed, r.duration_secs
            )?;
            for e in r.failures() {
                writeln!(
                    f,
                    "  FAIL {}: estimate {} reference {}",
                    e.name, e.estimate, e.reference
                )?;
            }
        }
        write!(f, "status {}", self.status)
    }
}

/// Runs every suite listed in `config`.
pub fn verify_suite(config: &ExperimentConfig) -> Result<VerifySummary> {
    let mut suites = Vec::new();
    let mut records = Vec::new();
    for name in &config.suites {
        let record = run_experiment(config, name)?;
        let failed = record.failures().count();
        suites.push(SuiteSummary {
            suite: name.clone(),
            passed: record.entries.len() - failed,
            failed,
        });
        records.push(record);
    }
    let status = i32::from(suites.iter().any(|s| s.failed > 0));
    Ok(VerifySummary {
        status,
        suites,
        records,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_config_passes_vacuously() {
        let s = verify_suite(&"".parse().unwrap()).unwrap();
        assert_eq!(s.status, 0);
        assert_eq!(s.total_tests(), 0);
    }

    #[test]
    fn corrupted_reference_fails() {
        let cfg: ExperimentConfig = "suites = binomial, gaussian".parse().unwrap();
        assert_eq!(verify_suite(&cfg).unwrap().status, 0);
        let bad = ExperimentConfig {
            reference_offset: 1.0,
            ..cfg
        };
        let s = verify_suite(&bad).unwrap();
        assert_ne!(s.status, 0);
        assert!(s.suites.iter().all(|x| x.failed > 0));
    }

    #[test]
    fn unknown_suite_and_unwritable_output_are_distinct_errors() {
        let cfg = ExperimentConfig::default();
        assert!(matches!(run_experiment(&cfg, "nope"), Err(Error::UnknownSuite(_))));
        let file = tempfile::NamedTempFile::new().unwrap();
        let cfg = ExperimentConfig {
            output: Some(file.path().join("sub")),
            ..cfg
        };
        assert!(matches!(run_experiment(&cfg, "binomial"), Err(Error::Output { .. })));
    }

    #[test]
    fn records_are_written_and_repeatable() {
        let dir = tempfile::tempdir().unwrap();
        let cfg: ExperimentConfig = format!(
            "suites = marginal\nmoment_reps = 5000\noutput = {}",
            dir.path().display()
        )
        .parse()
        .unwrap();
        let a = verify_suite(&cfg).unwrap();
        let b = verify_suite(&ExperimentConfig { workers: 3, ..cfg }).unwrap();
        assert_eq!(a.records[0].without_duration(), b.records[0].without_duration());
        assert_eq!(std::fs::read_dir(dir.path()).unwrap().count(), 4);
    }
}
