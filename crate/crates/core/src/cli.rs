//! Command-line front end.
//!
//! Exit status is 0 on success, 1 when a verification test fails or a run
//! cannot complete, and 2 on usage or parameter errors.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{CommandFactory, Parser, Subcommand};
use num_rational::BigRational;
use serde_json::json;

use crate::construction::{sample_window, ConstructionParams, Process};
use crate::error::{Error, Result};
use crate::harness::{emit_report, verify_suite, ExperimentConfig, ReportFormat};
use crate::oracle::{self, MomentQuery};
use crate::statistics::{estimate_moment, mixing_gap_table, CylinderSpec, MomentReport};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Parser)]
#[command(
    name = "tuplewise-clt",
    version,
    about = "Sample, query and verify the tuplewise independent block process"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct ProcessArgs {
    #[arg(long = "L", default_value_t = 6)]
    pub arity: usize,
    #[arg(long, default_value_t = 1)]
    pub level: u32,
    #[arg(long, default_value_t = 0.5)]
    pub p: f64,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Write one window of a process as `index,value[,mark]` rows.
    Sample {
        #[arg(long, value_parser = parse_process)]
        process: Process,
        #[command(flatten)]
        params: ProcessArgs,
        #[arg(long)]
        length: usize,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
    /// Estimate `E[S(W, h)]^power` with its standard error.
    Moment {
        #[arg(long, value_parser = parse_process)]
        process: Process,
        #[command(flatten)]
        params: ProcessArgs,
        #[arg(long)]
        h: usize,
        #[arg(long)]
        power: u32,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        /// Compare against this value instead of the built-in reference.
        #[arg(long, allow_hyphen_values = true)]
        reference: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Print an exact value.
    Oracle {
        #[arg(long)]
        query: String,
        #[arg(long = "L", default_value_t = 6)]
        arity: usize,
        #[arg(long, default_value_t = 0)]
        n: u32,
        #[arg(long)]
        h: Option<usize>,
        #[arg(long)]
        power: Option<u32>,
        #[arg(long)]
        shifted: bool,
        /// `index:exponent` pairs, comma separated.
        #[arg(long)]
        coords: Option<String>,
        #[arg(long, default_value_t = 1)]
        level: u8,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long)]
        trials: Option<u64>,
        #[arg(long)]
        modulus: Option<usize>,
        #[arg(long)]
        m: Option<i32>,
        /// Accepted for uniformity; oracle queries are deterministic.
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        json: bool,
    },
    /// Tabulate the mixing gap of two cylinders over several lags.
    Mixing {
        #[command(flatten)]
        params: ProcessArgs,
        #[arg(long = "N-list", value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[arg(long = "specA")]
        spec_a: String,
        #[arg(long = "specB")]
        spec_b: String,
        #[arg(long)]
        reps: u64,
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Run the verification suites listed in a config file.
    Verify {
        /// Without a config every suite runs at default scale.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        workers: Option<usize>,
        /// Directory receiving one JSON and one CSV record per suite.
        #[arg(long)]
        output: Option<PathBuf>,
        #[arg(long)]
        json: bool,
    },
}

fn parse_process(s: &str) -> std::result::Result<Process, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

impl ProcessArgs {
    fn build(&self, seed: u64) -> Result<ConstructionParams> {
        ConstructionParams::new(self.arity, self.level, self.p, seed)
    }
}

/// Parses `argv` (including the program name) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch_to(argv, &mut stdout.lock(), &mut stderr.lock())
}

pub fn dispatch_to<I, T>(argv: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { EXIT_OK };
            let rendered = e.render().to_string();
            let _ = if e.use_stderr() {
                err.write_all(rendered.as_bytes())
            } else {
                out.write_all(rendered.as_bytes())
            };
            return code;
        }
    };
    let name = subcommand_name(&cli.command);
    match run(cli.command, out) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            if is_usage(&e) {
                if let Some(sub) = Cli::command().find_subcommand_mut(name) {
                    let _ = write!(err, "\n{}", sub.render_usage());
                    let _ = writeln!(err, "\n\nFor more information, try 'tuplewise-clt {name} --help'.");
                }
                EXIT_USAGE
            } else {
                EXIT_FAILURE
            }
        }
    }
}

fn subcommand_name(c: &Command) -> &'static str {
    match c {
        Command::Sample { .. } => "sample",
        Command::Moment { .. } => "moment",
        Command::Oracle { .. } => "oracle",
        Command::Mixing { .. } => "mixing",
        Command::Verify { .. } => "verify",
    }
}

fn is_usage(e: &Error) -> bool {
    matches!(e, Error::Parameter(_) | Error::Config { .. } | Error::UnknownSuite(_))
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Output {
        path: path.to_path_buf(),
        source,
    }
}

/// Writes `bytes` to `path` through a sibling temporary file, so a failed
/// run leaves nothing behind.
fn write_atomically(path: &Path, bytes: &[u8]) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io_err(path))?;
    tmp.write_all(bytes).map_err(io_err(path))?;
    tmp.persist(path).map_err(|e| io_err(path)(e.error))?;
    Ok(())
}

fn emit(out: &mut dyn Write, text: &str) -> Result<()> {
    out.write_all(text.as_bytes()).map_err(io_err(Path::new("<stdout>")))
}

fn run(command: Command, out: &mut dyn Write) -> Result<i32> {
    match command {
        Command::Sample {
            process,
            params,
            length,
            seed,
            out: path,
            json,
        } => {
            let params = params.build(seed)?;
            let window = sample_window(process, &params, length, &params.stream())?;
            let bytes = if json {
                let mut v = serde_json::to_vec(&window)?;
                v.push(b'\n');
                v
            } else {
                window_csv(&window)?
            };
            match path {
                Some(p) => write_atomically(&p, &bytes)?,
                None => out.write_all(&bytes).map_err(io_err(Path::new("<stdout>")))?,
            }
        }
        Command::Moment {
            process,
            params,
            h,
            power,
            reps,
            seed,
            reference,
            json,
        } => {
            let params = params.build(seed)?;
            let mut report = estimate_moment(process, &params, h, power, reps)?;
            if let Some(r) = reference.or_else(|| default_reference(process, &params, h, power)) {
                report = report.with_reference(r);
            }
            emit(out, &format_report(&report, json)?)?;
        }
        Command::Oracle {
            query,
            arity,
            n,
            h,
            power,
            shifted,
            coords,
            level,
            p,
            tol,
            trials,
            modulus,
            m,
            seed: _,
            json,
        } => {
            let args = OracleArgs {
                arity,
                n,
                h,
                power,
                shifted,
                coords,
                level,
                p,
                tol,
                trials,
                modulus,
                m,
            };
            let value = oracle_query(&query, &args)?;
            let text = if json {
                format!("{}\n", json!({ "query": query, "value": value }))
            } else {
                match &value {
                    serde_json::Value::Array(items) => {
                        let parts: Vec<String> = items.iter().map(ToString::to_string).collect();
                        format!("{}\n", parts.join(","))
                    }
                    other => format!("{other}\n"),
                }
            };
            emit(out, &text)?;
        }
        Command::Mixing {
            params,
            n_list,
            spec_a,
            spec_b,
            reps,
            seed,
            json,
        } => {
            let params = params.build(seed)?;
            let a: CylinderSpec = spec_a.parse()?;
            let b: CylinderSpec = spec_b.parse()?;
            let rows = mixing_gap_table(&params, &a, &b, &n_list, reps)?;
            let text = if json {
                format!("{}\n", serde_json::to_string(&rows)?)
            } else {
                let mut t = format!("{:>6}  {:>13}  {:>11}  {:>8}\n", "N", "gap", "std_error", "z");
                for r in &rows {
                    let z = r.gap.z_score.map(|z| format!("{z:+.3}")).unwrap_or_else(|| "-".into());
                    t.push_str(&format!(
                        "{:>6}  {:>13.6e}  {:>11.3e}  {:>8}\n",
                        r.lag, r.gap.estimate, r.gap.std_error, z
                    ));
                }
                t
            };
            emit(out, &text)?;
        }
        Command::Verify {
            config,
            seed,
            workers,
            output,
            json,
        } => {
            let mut cfg = match &config {
                Some(path) => ExperimentConfig::from_path(path)?,
                None => ExperimentConfig::all_suites(),
            };
            if let Some(s) = seed {
                cfg.params = cfg.params.with_seed(s);
            }
            if let Some(w) = workers {
                cfg.workers = w;
            }
            if output.is_some() {
                cfg.output = output;
            }
            let summary = verify_suite(&cfg)?;
            if json {
                emit(out, &format!("{}\n", serde_json::to_string(&summary)?))?;
            } else {
                for record in &summary.records {
                    let table = emit_report(record, ReportFormat::Text)?;
                    emit(out, &String::from_utf8_lossy(&table))?;
                    emit(out, "\n")?;
                }
                emit(out, &format!("{summary}\n"))?;
            }
            return Ok(if summary.status == 0 { EXIT_OK } else { EXIT_FAILURE });
        }
    }
    Ok(EXIT_OK)
}

fn window_csv(window: &crate::construction::PathWindow) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let enc = |e: csv::Error| Error::Numeric(format!("csv encoding failed: {e}"));
    match &window.marks {
        Some(_) => w.write_record(["index", "value", "mark"]).map_err(enc)?,
        None => w.write_record(["index", "value"]).map_err(enc)?,
    }
    for (i, v) in window.values.iter().enumerate() {
        let index = (window.start + i as i64).to_string();
        match &window.marks {
            Some(m) => w.write_record([index, v.to_string(), m[i].to_string()]).map_err(enc)?,
            None => w.write_record([index, v.to_string()]).map_err(enc)?,
        }
    }
    w.into_inner()
        .map_err(|e| Error::Numeric(format!("csv encoding failed: {e}")))
}

fn format_report(report: &MomentReport, json: bool) -> Result<String> {
    if json {
        return Ok(format!("{}\n", serde_json::to_string(report)?));
    }
    let mut t = format!(
        "estimate  {}\nstd_error {}\nreps      {}\n",
        report.estimate, report.std_error, report.reps
    );
    if let Some(r) = report.exact_ref {
        t.push_str(&format!("reference {r}\n"));
    }
    if let Some(z) = report.z_score {
        t.push_str(&format!("z_score   {z:+.4}\n"));
    }
    Ok(t)
}

/// Built-in exact value of `E[S(W, h)]^power`, when one is known: powers
/// 1, 2 and 4 from `(L-1)`-wise independence, and power `L` at level 1 from
/// the exact oracle.
pub fn default_reference(process: Process, params: &ConstructionParams, h: usize, power: u32) -> Option<f64> {
    let hf = h as f64;
    let thinned = process == Process::XTilde;
    let p = if thinned { params.p() } else { 1.0 };
    match power {
        1 => Some(0.0),
        2 => Some(p * hf),
        4 if thinned => oracle::thinned_fourth_moment(p, h as u64).ok(),
        4 => Some(hf * 9.0 / 5.0 + 3.0 * hf * (hf - 1.0)),
        _ if !thinned && params.level() == 1 && power as usize == params.arity() => {
            oracle::exact_partial_sum_moment_level1(params.arity(), h, power, process == Process::X).ok()
        }
        _ => None,
    }
}

struct OracleArgs {
    arity: usize,
    n: u32,
    h: Option<usize>,
    power: Option<u32>,
    shifted: bool,
    coords: Option<String>,
    level: u8,
    p: f64,
    tol: Option<f64>,
    trials: Option<u64>,
    modulus: Option<usize>,
    m: Option<i32>,
}

pub const ORACLE_QUERIES: &[&str] = &[
    "deficit-bound",
    "clt-gap",
    "finite-h-gap",
    "partial-sum-moment",
    "parity-moment",
    "abs-uniform-moment",
    "gaussian-even-moment",
    "gaussian-mixture",
    "settling-index",
    "binomial-mod",
    "least-equidistributed",
    "binomial-tail-half",
    "fourth-moment",
];

fn need<T>(v: Option<T>, flag: &str, query: &str) -> Result<T> {
    v.ok_or_else(|| Error::Parameter(format!("query {query} requires --{flag}")))
}

fn parse_coords(s: &str) -> Result<Vec<(usize, u32)>> {
    s.split(',')
        .map(|pair| {
            let (i, e) = pair
                .split_once(':')
                .ok_or_else(|| Error::Parameter(format!("coordinate {pair:?} is not index:exponent")))?;
            let i = i
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad index in {pair:?}")))?;
            let e = e
                .trim()
                .parse()
                .map_err(|_| Error::Parameter(format!("bad exponent in {pair:?}")))?;
            Ok((i, e))
        })
        .collect()
}

fn oracle_query(query: &str, a: &OracleArgs) -> Result<serde_json::Value> {
    let value = match query {
        "deficit-bound" => json!(oracle::deficit_bound(a.arity, a.n)?),
        "clt-gap" => json!(oracle::clt_gap_constant(a.arity)?),
        "finite-h-gap" => json!(oracle::finite_h_gap_constant(a.arity)?),
        "partial-sum-moment" => json!(oracle::exact_partial_sum_moment_level1(
            a.arity,
            need(a.h, "h", query)?,
            need(a.power, "power", query)?,
            a.shifted
        )?),
        "parity-moment" => {
            let coords = parse_coords(&need(a.coords.clone(), "coords", query)?)?;
            let q = MomentQuery::new(coords, a.level, a.shifted)?;
            json!(oracle::parity_moment_level1(a.arity, &q)?)
        }
        "abs-uniform-moment" => json!(oracle::abs_uniform_moment(need(a.m, "m", query)?)?),
        "gaussian-even-moment" => json!(oracle::gaussian_even_moment(need(a.power, "power", query)?)?),
        "gaussian-mixture" => json!(oracle::gaussian_mixture_moment(
            need(a.h, "h", query)?,
            need(a.power, "power", query)?,
            a.p
        )?),
        "settling-index" => json!(oracle::gaussian_mixture_settling_index(
            need(a.power, "power", query)?,
            a.p,
            need(a.tol, "tol", query)?,
            a.h.unwrap_or(1_000_000)
        )?),
        "binomial-mod" => json!(oracle::binomial_mod_distribution(
            need(a.trials, "trials", query)?,
            need(a.modulus, "modulus", query)?
        )?
        .probabilities()),
        "least-equidistributed" => {
            let tol = BigRational::from_float(need(a.tol, "tol", query)?)
                .ok_or_else(|| Error::Parameter("tol must be finite".into()))?;
            let found = oracle::least_equidistributed_trials(
                need(a.modulus, "modulus", query)?,
                &tol,
                a.trials.unwrap_or(100_000),
            )?;
            json!(found.map(|d| d.trials()))
        }
        "binomial-tail-half" => json!(oracle::binomial_tail_half(need(a.h, "h", query)? as u64)?),
        "fourth-moment" => json!(oracle::thinned_fourth_moment(a.p, need(a.h, "h", query)? as u64)?),
        other => {
            return Err(Error::Parameter(format!(
                "unknown query `{other}`; expected one of {}",
                ORACLE_QUERIES.join(", ")
            )))
        }
    };
    Ok(value)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run_cli(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("tuplewise-clt").chain(args.iter().copied());
        let code = dispatch_to(argv, &mut out, &mut err);
        (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
    }

    #[test]
    fn deficit_bound_query() {
        let (code, out, _) = run_cli(&["oracle", "--query", "deficit-bound", "--L", "6", "--n", "0"]);
        assert_eq!(code, 0);
        assert_eq!(out, "11.25\n");
    }

    #[test]
    fn oracle_queries_all_answer() {
        let cases: &[&[&str]] = &[
            &["--query", "clt-gap"],
            &["--query", "finite-h-gap"],
            &[
                "--query",
                "partial-sum-moment",
                "--h",
                "12",
                "--power",
                "6",
                "--shifted",
            ],
            &["--query", "parity-moment", "--coords", "0:2,1:2"],
            &["--query", "abs-uniform-moment", "--m", "3"],
            &["--query", "gaussian-even-moment", "--power", "6"],
            &["--query", "gaussian-mixture", "--h", "10", "--power", "6"],
            &["--query", "settling-index", "--power", "6", "--tol", "0.1"],
            &["--query", "binomial-mod", "--trials", "5", "--modulus", "6"],
            &["--query", "least-equidistributed", "--modulus", "6", "--tol", "1e-6"],
            &["--query", "binomial-tail-half", "--h", "9"],
            &["--query", "fourth-moment", "--h", "4"],
        ];
        assert_eq!(cases.len() + 1, ORACLE_QUERIES.len());
        for case in cases {
            let mut args = vec!["oracle"];
            args.extend_from_slice(case);
            let (code, out, err) = run_cli(&args);
            assert_eq!(code, 0, "{case:?}: {err}");
            assert!(!out.trim().is_empty());
        }
        let (_, out, _) = run_cli(&[
            "oracle",
            "--query",
            "least-equidistributed",
            "--modulus",
            "6",
            "--tol",
            "1e-6",
        ]);
        assert_eq!(out, "89\n");
    }

    #[test]
    fn usage_errors_exit_two_and_name_the_flag() {
        let (code, _, err) = run_cli(&["sample", "--process", "x", "--length", "4"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--seed"), "{err}");
        let (code, _, err) = run_cli(&["oracle", "--query", "partial-sum-moment", "--power", "6"]);
        assert_eq!(code, EXIT_USAGE);
        assert!(err.contains("--h") && err.contains("Usage"), "{err}");
        let (code, _, _) = run_cli(&["sample", "--process", "z", "--length", "4", "--seed", "1"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_cli(&["sample", "--process", "y", "--L", "5", "--length", "4", "--seed", "1"]);
        assert_eq!(code, EXIT_USAGE);
        let (code, _, _) = run_cli(&[]);
        assert_eq!(code, EXIT_USAGE);
    }

    #[test]
    fn sample_csv_columns() {
        let (code, out, _) = run_cli(&["sample", "--process", "xtilde", "--length", "3", "--seed", "7"]);
        assert_eq!(code, 0);
        let lines: Vec<&str> = out.lines().collect();
        assert_eq!(lines[0], "index,value,mark");
        assert_eq!(lines.len(), 4);
        let (_, out, _) = run_cli(&["sample", "--process", "y", "--length", "3", "--seed", "7"]);
        assert!(out.starts_with("index,value\n0,"));
    }

    #[test]
    fn moment_json_has_report_fields() {
        let (code, out, _) = run_cli(&[
            "moment",
            "--process",
            "x",
            "--h",
            "2",
            "--power",
            "2",
            "--reps",
            "2000",
            "--seed",
            "3",
            "--json",
        ]);
        assert_eq!(code, 0);
        let r: MomentReport = serde_json::from_str(&out).unwrap();
        assert_eq!(r.exact_ref, Some(2.0));
        assert_eq!(r.reps, 2000);
    }

    #[test]
    fn default_references() {
        let p = ConstructionParams::new(6, 1, 0.5, 0).unwrap();
        assert_eq!(default_reference(Process::XTilde, &p, 1, 4), Some(0.9));
        assert_eq!(default_reference(Process::Y, &p, 1, 4), Some(1.8));
        assert!(default_reference(Process::X, &p, 12, 6).unwrap() <= 25_908.75);
        assert_eq!(default_reference(Process::XTilde, &p, 12, 6), None);
    }
}
