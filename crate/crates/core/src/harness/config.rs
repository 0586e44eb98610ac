use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::suites::SUITES;
use crate::construction::ConstructionParams;
use crate::error::{Error, Result};
use crate::statistics::CylinderSpec;

/// Monte Carlo scale and test inputs a config may tune.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    pub moment_reps: u64,
    pub cylinder_reps: u64,
    pub deficit_reps: u64,
    pub independence_reps: u64,
    pub mixing_reps: u64,
    pub subblock_reps: u64,
    pub ks_reps: u64,
    pub sign_draws: u64,
    pub tuples: usize,
    pub n_list: Vec<usize>,
    pub mixing_spec_a: String,
    pub mixing_spec_b: String,
}

impl Default for Scale {
    fn default() -> Self {
        Self {
            moment_reps: 1_000_000,
            cylinder_reps: 100_000,
            deficit_reps: 10_000_000,
            independence_reps: 1_000_000,
            mixing_reps: 1_000_000,
            subblock_reps: 100_000,
            ks_reps: 100_000,
            sign_draws: 10_000,
            tuples: 10,
            n_list: vec![4, 8, 16, 32, 64],
            mixing_spec_a: "0:(0.5,inf)".to_string(),
            mixing_spec_b: "0:(-inf,-0.3)".to_string(),
        }
    }
}

/// Parsed experiment configuration.
///
/// The file format is one `key = value` per line; `#` starts a comment.
/// Keys absent from the file keep their defaults, except `suites`, which
/// defaults to none.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub suites: Vec<String>,
    pub params: ConstructionParams,
    pub scale: Scale,
    pub output: Option<PathBuf>,
    /// Rayon pool size; 0 uses the rayon default.
    pub workers: usize,
    /// Added to every reference value before comparison.
    pub reference_offset: f64,
}

pub const DEFAULT_SEED: u64 = 20_260_101;

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            suites: Vec::new(),
            params: ConstructionParams::new(6, 1, 0.5, DEFAULT_SEED).expect("default parameters are valid"),
            scale: Scale::default(),
            output: None,
            workers: 0,
            reference_offset: 0.0,
        }
    }
}

fn config_err<T>(line: usize, message: impl Into<String>) -> Result<T> {
    Err(Error::Config {
        line,
        message: message.into(),
    })
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e| Error::Config {
        line,
        message: format!("invalid value {value:?} for {key}: {e}"),
    })
}

fn parse_reps(line: usize, key: &str, value: &str) -> Result<u64> {
    let v: f64 = parse_value(line, key, value)?;
    if !(v >= 1.0 && v.fract() == 0.0 && v < 1e15) {
        return config_err(line, format!("{key} must be a positive integer, got {value:?}"));
    }
    Ok(v as u64)
}

impl ExperimentConfig {
    /// Every suite in the catalog with default parameters and scale.
    pub fn all_suites() -> Self {
        Self {
            suites: SUITES.iter().map(|s| s.to_string()).collect(),
            ..Self::default()
        }
    }

    pub fn with_suites<S: AsRef<str>>(mut self, suites: &[S]) -> Result<Self> {
        self.suites = suites.iter().map(|s| s.as_ref().to_string()).collect();
        self.validate()?;
        Ok(self)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|source| Error::Input {
            path: path.to_path_buf(),
            source,
        })?;
        text.parse()
    }

    pub fn validate(&self) -> Result<()> {
        for s in &self.suites {
            if !SUITES.contains(&s.as_str()) {
                return Err(Error::UnknownSuite(s.clone()));
            }
        }
        let a: CylinderSpec = self.scale.mixing_spec_a.parse()?;
        let b: CylinderSpec = self.scale.mixing_spec_b.parse()?;
        if a.marks().is_some() || b.marks().is_some() {
            return Err(Error::Parameter("mixing specs may not carry marks".into()));
        }
        if self.scale.n_list.is_empty() {
            return Err(Error::Parameter("n_list must not be empty".into()));
        }
        Ok(())
    }
}

impl std::str::FromStr for ExperimentConfig {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        let (mut arity, mut level, mut p, mut seed) = (6usize, 1u32, 0.5f64, DEFAULT_SEED);
        let mut seen = BTreeSet::new();
        for (i, raw) in text.lines().enumerate() {
            let line = i + 1;
            let content = raw.split('#').next().unwrap_or("").trim();
            if content.is_empty() {
                continue;
            }
            let Some((key, value)) = content.split_once('=') else {
                return config_err(line, format!("expected `key = value`, got {content:?}"));
            };
            let (key, value) = (key.trim(), value.trim());
            if !seen.insert(key.to_string()) {
                return config_err(line, format!("duplicate key {key}"));
            }
            let s = &mut cfg.scale;
            match key {
                "suites" => {
                    cfg.suites = if value == "all" {
                        SUITES.iter().map(|s| s.to_string()).collect()
                    } else {
                        value
                            .split(',')
                            .map(str::trim)
                            .filter(|v| !v.is_empty())
                            .map(String::from)
                            .collect()
                    }
                }
                "L" => arity = parse_value(line, key, value)?,
                "level" => level = parse_value(line, key, value)?,
                "p" => p = parse_value(line, key, value)?,
                "seed" => seed = parse_value(line, key, value)?,
                "workers" => cfg.workers = parse_value(line, key, value)?,
                "output" => cfg.output = Some(PathBuf::from(value)),
                "reference_offset" => cfg.reference_offset = parse_value(line, key, value)?,
                "moment_reps" => s.moment_reps = parse_reps(line, key, value)?,
                "cylinder_reps" => s.cylinder_reps = parse_reps(line, key, value)?,
                "deficit_reps" => s.deficit_reps = parse_reps(line, key, value)?,
                "independence_reps" => s.independence_reps = parse_reps(line, key, value)?,
                "mixing_reps" => s.mixing_reps = parse_reps(line, key, value)?,
                "subblock_reps" => s.subblock_reps = parse_reps(line, key, value)?,
                "ks_reps" => s.ks_reps = parse_reps(line, key, value)?,
                "sign_draws" => s.sign_draws = parse_reps(line, key, value)?,
                "tuples" => s.tuples = parse_value(line, key, value)?,
                "n_list" => {
                    s.n_list = value
                        .split(',')
                        .map(|v| parse_value(line, key, v.trim()))
                        .collect::<Result<_>>()?
                }
                "mixing_spec_a" => s.mixing_spec_a = value.to_string(),
                "mixing_spec_b" => s.mixing_spec_b = value.to_string(),
                _ => return config_err(line, format!("unknown key {key}")),
            }
        }
        cfg.params = ConstructionParams::new(arity, level, p, seed)?;
        cfg.validate()?;
        Ok(cfg)
    }
}
