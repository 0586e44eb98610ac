// Runs verification suites from a config and writes their records.

use tuplewise_clt::harness::{emit_report, verify_suite, ExperimentConfig, ReportFormat};
use tuplewise_clt::Result;

const CONFIG: &str = "\
suites = marginal, binomial, gaussian
seed = 20260101
moment_reps = 20000
";

pub fn run_example() -> Result<()> {
    let dir = tempfile::tempdir().map_err(|source| tuplewise_clt::Error::Output {
        path: std::env::temp_dir(),
        source,
    })?;
    let mut cfg: ExperimentConfig = CONFIG.parse()?;
    cfg.output = Some(dir.path().to_path_buf());

    let summary = verify_suite(&cfg)?;
    let table = emit_report(&summary.records[0], ReportFormat::Text)?;
    print!("{}", String::from_utf8_lossy(&table));
    println!("{summary}");
    let mut names: Vec<String> = std::fs::read_dir(dir.path())
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.file_name().to_string_lossy().into_owned())
        .collect();
    names.sort();
    for name in names {
        println!("wrote {name}");
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    if let Err(e) = run_example() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}
