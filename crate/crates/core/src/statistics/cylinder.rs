//! Cylinder events: per-coordinate interval unions plus optional thinning
//! marks.
//!
//! Textual form, entries separated by `;`:
//!
//! ```text
//! 0:(0.5,inf);2:[-1,0)|(1,2]   coordinate constraints (unions with `|`)
//! marks=0110                   required thinning marks
//! len=4                        window length when trailing coordinates are free
//! ```
//!
//! Bracket types are honored exactly, which matters for the thinned process
//! because its marginal has an atom at 0.

use std::fmt;
use std::str::FromStr;

use crate::error::{param_err, Error, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
    pub lo_closed: bool,
    pub hi_closed: bool,
}

impl Interval {
    pub fn new(lo: f64, lo_closed: bool, hi: f64, hi_closed: bool) -> Result<Self> {
        if lo.is_nan() || hi.is_nan() {
            return param_err("interval endpoint is NaN");
        }
        Ok(Self {
            lo,
            hi,
            lo_closed: lo_closed && lo.is_finite(),
            hi_closed: hi_closed && hi.is_finite(),
        })
    }

    pub fn open(lo: f64, hi: f64) -> Self {
        Self::new(lo, false, hi, false).expect("NaN endpoint")
    }

    /// `[lo, hi)`.
    pub fn left_closed(lo: f64, hi: f64) -> Self {
        Self::new(lo, true, hi, false).expect("NaN endpoint")
    }

    pub fn full_line() -> Self {
        Self::open(f64::NEG_INFINITY, f64::INFINITY)
    }

    pub fn is_empty(&self) -> bool {
        self.lo > self.hi || (self.lo == self.hi && !(self.lo_closed && self.hi_closed))
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        (x > self.lo || (self.lo_closed && x == self.lo)) && (x < self.hi || (self.hi_closed && x == self.hi))
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let end = |v: f64| {
            if v == f64::INFINITY {
                "inf".to_string()
            } else if v == f64::NEG_INFINITY {
                "-inf".to_string()
            } else {
                format!("{v}")
            }
        };
        write!(
            f,
            "{}{},{}{}",
            if self.lo_closed { '[' } else { '(' },
            end(self.lo),
            end(self.hi),
            if self.hi_closed { ']' } else { ')' }
        )
    }
}

/// A normalized finite union of disjoint intervals, sorted by left end.
#[derive(Clone, Debug, PartialEq)]
pub struct IntervalSet(Vec<Interval>);

impl IntervalSet {
    pub fn new(intervals: impl IntoIterator<Item = Interval>) -> Self {
        let mut parts: Vec<Interval> = intervals.into_iter().filter(|i| !i.is_empty()).collect();
        parts.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(b.lo_closed.cmp(&a.lo_closed)));
        let mut merged: Vec<Interval> = Vec::with_capacity(parts.len());
        for iv in parts {
            if let Some(last) = merged.last_mut() {
                let touches = iv.lo < last.hi || (iv.lo == last.hi && (last.hi_closed || iv.lo_closed));
                if touches {
                    if iv.hi > last.hi {
                        last.hi = iv.hi;
                        last.hi_closed = iv.hi_closed;
                    } else if iv.hi == last.hi {
                        last.hi_closed |= iv.hi_closed;
                    }
                    continue;
                }
            }
            merged.push(iv);
        }
        Self(merged)
    }

    pub fn full_line() -> Self {
        Self(vec![Interval::full_line()])
    }

    pub fn intervals(&self) -> &[Interval] {
        &self.0
    }

    pub fn is_full_line(&self) -> bool {
        self.0.len() == 1 && self.0[0] == Interval::full_line()
    }

    #[inline]
    pub fn contains(&self, x: f64) -> bool {
        self.0.iter().any(|i| i.contains(x))
    }

    pub fn complement(&self) -> Self {
        let mut gaps = Vec::new();
        let (mut lo, mut lo_closed) = (f64::NEG_INFINITY, false);
        for iv in &self.0 {
            gaps.push(Interval {
                lo,
                hi: iv.lo,
                lo_closed,
                hi_closed: !iv.lo_closed && iv.lo.is_finite(),
            });
            lo = iv.hi;
            lo_closed = !iv.hi_closed && iv.hi.is_finite();
        }
        gaps.push(Interval {
            lo,
            hi: f64::INFINITY,
            lo_closed,
            hi_closed: false,
        });
        // the gaps below -inf / above +inf are empty and get dropped
        Self::new(
            gaps.into_iter()
                .filter(|g| !(g.lo == f64::INFINITY || g.hi == f64::NEG_INFINITY)),
        )
    }
}

impl fmt::Display for IntervalSet {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("{}");
        }
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join("|"))
    }
}

/// Event `{W[0..len) ∈ A_0 × ... × A_{len-1}, V[0..len) = v}`.
#[derive(Clone, Debug, PartialEq)]
pub struct CylinderSpec {
    constraints: Vec<IntervalSet>,
    marks: Option<Vec<u8>>,
}

impl CylinderSpec {
    pub fn new(constraints: Vec<IntervalSet>, marks: Option<Vec<u8>>) -> Result<Self> {
        if constraints.is_empty() {
            return param_err("cylinder window length must be at least 1");
        }
        if let Some(m) = &marks {
            if m.len() != constraints.len() {
                return param_err(format!(
                    "{} marks for a window of length {}",
                    m.len(),
                    constraints.len()
                ));
            }
            if m.iter().any(|&v| v > 1) {
                return param_err("marks must be 0 or 1");
            }
        }
        Ok(Self { constraints, marks })
    }

    pub fn unconstrained(len: usize) -> Result<Self> {
        Self::new(vec![IntervalSet::full_line(); len], None)
    }

    /// One constrained coordinate, the rest free.
    pub fn single(len: usize, index: usize, set: IntervalSet) -> Result<Self> {
        if index >= len {
            return param_err(format!("coordinate {index} outside window of length {len}"));
        }
        let mut constraints = vec![IntervalSet::full_line(); len];
        constraints[index] = set;
        Self::new(constraints, None)
    }

    pub fn with_marks(mut self, marks: Vec<u8>) -> Result<Self> {
        self.marks = Some(marks);
        Self::new(self.constraints, self.marks)
    }

    pub fn window_length(&self) -> usize {
        self.constraints.len()
    }

    pub fn constraints(&self) -> &[IntervalSet] {
        &self.constraints
    }

    pub fn marks(&self) -> Option<&[u8]> {
        self.marks.as_deref()
    }

    /// Checks `values` (and `marks`, when the spec has them) on the first
    /// `window_length` positions.
    #[inline]
    pub fn matches(&self, values: &[f64], marks: &[u8]) -> bool {
        if let Some(want) = &self.marks {
            if marks.len() < want.len() || marks[..want.len()] != want[..] {
                return false;
            }
        }
        self.constraints.iter().zip(values).all(|(set, &v)| set.contains(v))
    }
}

fn parse_endpoint(s: &str) -> Result<f64> {
    match s.trim() {
        "inf" | "+inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        "sqrt3" => Ok(crate::construction::SQRT3),
        "-sqrt3" => Ok(-crate::construction::SQRT3),
        t => t
            .parse::<f64>()
            .map_err(|_| Error::Parameter(format!("bad interval endpoint `{t}`"))),
    }
}

impl FromStr for Interval {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let lo_closed = match s.chars().next() {
            Some('[') => true,
            Some('(') => false,
            _ => return param_err(format!("interval `{s}` must start with [ or (")),
        };
        let hi_closed = match s.chars().last() {
            Some(']') => true,
            Some(')') => false,
            _ => return param_err(format!("interval `{s}` must end with ] or )")),
        };
        let body = &s[1..s.len() - 1];
        let (a, b) = body
            .split_once(',')
            .ok_or_else(|| Error::Parameter(format!("interval `{s}` needs two endpoints")))?;
        let (lo, hi) = (parse_endpoint(a)?, parse_endpoint(b)?);
        if lo > hi {
            return param_err(format!("interval `{s}` has lower end above upper end"));
        }
        Interval::new(lo, lo_closed, hi, hi_closed)
    }
}

impl FromStr for CylinderSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut coords: Vec<(usize, IntervalSet)> = Vec::new();
        let mut marks: Option<Vec<u8>> = None;
        let mut len: Option<usize> = None;
        for entry in s.split(';').map(str::trim).filter(|e| !e.is_empty()) {
            if let Some(m) = entry.strip_prefix("marks=") {
                let parsed = m
                    .trim()
                    .chars()
                    .map(|c| match c {
                        '0' => Ok(0),
                        '1' => Ok(1),
                        other => param_err(format!("mark `{other}` is not 0 or 1")),
                    })
                    .collect::<Result<Vec<u8>>>()?;
                marks = Some(parsed);
            } else if let Some(l) = entry.strip_prefix("len=") {
                len = Some(
                    l.trim()
                        .parse()
                        .map_err(|_| Error::Parameter(format!("bad window length `{l}`")))?,
                );
            } else {
                let (idx, sets) = entry
                    .split_once(':')
                    .ok_or_else(|| Error::Parameter(format!("bad cylinder entry `{entry}`")))?;
                let idx: usize = idx
                    .trim()
                    .parse()
                    .map_err(|_| Error::Parameter(format!("bad coordinate index `{idx}`")))?;
                if coords.iter().any(|c| c.0 == idx) {
                    return param_err(format!("coordinate {idx} constrained twice"));
                }
                let set = IntervalSet::new(sets.split('|').map(str::parse).collect::<Result<Vec<_>>>()?);
                coords.push((idx, set));
            }
        }
        let needed = coords.iter().map(|c| c.0 + 1).max().unwrap_or(0);
        let window = match (len, &marks) {
            (Some(l), Some(m)) if l != m.len() => {
                return param_err(format!("len={l} disagrees with {} marks", m.len()))
            }
            (Some(l), _) => l,
            (None, Some(m)) => m.len(),
            (None, None) => needed,
        };
        if needed > window {
            return param_err(format!("coordinate {} outside window of length {window}", needed - 1));
        }
        let mut constraints = vec![IntervalSet::full_line(); window];
        for (i, set) in coords {
            constraints[i] = set;
        }
        Self::new(constraints, marks)
    }
}

impl fmt::Display for CylinderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut parts: Vec<String> = self
            .constraints
            .iter()
            .enumerate()
            .filter(|(_, s)| !s.is_full_line())
            .map(|(i, s)| format!("{i}:{s}"))
            .collect();
        match &self.marks {
            Some(m) => parts.push(format!("marks={}", m.iter().map(|v| v.to_string()).collect::<String>())),
            None => parts.push(format!("len={}", self.constraints.len())),
        }
        f.write_str(&parts.join(";"))
    }
}
