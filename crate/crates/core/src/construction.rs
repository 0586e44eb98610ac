//! The hierarchical block process, its random-shift stationarization and the
//! thinned process built on top of it.
//!
//! A level-0 block is a single value `ε·√3·U`. A level-(k+1) block is the
//! concatenation of `L` independent level-k blocks, each multiplied by a sign
//! `s_i`. The first `L-1` signs are fair coin flips; the last one is chosen so
//! that the product of the signed sub-block sums is always negative:
//!
//! ```text
//! s_L = -(s_1 ⋯ s_{L-1}) · ∏ sgn(t_i),   ∏ (s_i t_i) = -∏ |t_i|
//! ```
//!
//! Any `L-1` of the signs are independent fair coins, which is what gives the
//! process `(L-1)`-tuplewise independence while fully coupling `L`-tuples.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{param_err, Error, Result};
use crate::rng::{open01, CounterRng};
use crate::sparsifier;

pub const SQRT3: f64 = 1.732_050_807_568_877_2;

const TAG_BLOCKS: u64 = 0x0b10_c000;
const TAG_SHIFT: u64 = 0x5417_7000;
const TAG_MARKS: u64 = 0x3a2c_5000;
const TAG_SOURCE: u64 = 0x5012_ce00;

/// `L`, the level `n`, the thinning probability `p` and the seed.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConstructionParams {
    #[serde(rename = "L")]
    arity: usize,
    level: u32,
    p: f64,
    seed: u64,
}

impl ConstructionParams {
    pub fn new(arity: usize, level: u32, p: f64, seed: u64) -> Result<Self> {
        if arity < 6 || !arity.is_multiple_of(2) {
            return param_err(format!("L must be even and at least 6, got {arity}"));
        }
        if !(p > 0.0 && p < 1.0) {
            return param_err(format!("p must lie in (0, 1), got {p}"));
        }
        checked_block_len(arity, level)?;
        Ok(Self { arity, level, p, seed })
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// `L^n`.
    pub fn block_len(&self) -> usize {
        self.arity.pow(self.level)
    }

    pub fn with_level(&self, level: u32) -> Result<Self> {
        Self::new(self.arity, level, self.p, self.seed)
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        Self { seed, ..*self }
    }

    pub fn with_p(&self, p: f64) -> Result<Self> {
        Self::new(self.arity, self.level, p, self.seed)
    }

    /// Root stream for this parameter set.
    pub fn stream(&self) -> CounterRng {
        CounterRng::new(self.seed)
    }
}

fn checked_block_len(arity: usize, level: u32) -> Result<usize> {
    (arity as i64)
        .checked_pow(level)
        .and_then(|v| usize::try_from(v).ok())
        .ok_or_else(|| Error::Parameter(format!("L^n overflows for L = {arity}, n = {level}")))
}

/// Which sequence a window was drawn from.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Process {
    /// Block-aligned hierarchical process.
    #[serde(rename = "Y")]
    Y,
    /// Random-shift stationarization of `Y`.
    #[serde(rename = "X")]
    X,
    /// `X` thinned by i.i.d. Bernoulli(p) marks.
    #[serde(rename = "X-tilde")]
    XTilde,
}

impl fmt::Display for Process {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Process::Y => "Y",
            Process::X => "X",
            Process::XTilde => "X-tilde",
        })
    }
}

impl FromStr for Process {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "y" => Ok(Process::Y),
            "x" => Ok(Process::X),
            "xtilde" | "x-tilde" | "x_tilde" => Ok(Process::XTilde),
            other => param_err(format!("unknown process `{other}` (expected y, x or xtilde)")),
        }
    }
}

/// One level-n block: `L^n` values drawn from the block law.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BlockSample {
    pub level: u32,
    pub values: Vec<f64>,
}

/// A contiguous realized segment `W[start .. start + len)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PathWindow {
    pub start: i64,
    pub values: Vec<f64>,
    /// Thinning marks; present only for [`Process::XTilde`].
    pub marks: Option<Vec<u8>>,
    pub process: Process,
}

impl PathWindow {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn sum(&self) -> f64 {
        self.values.iter().sum()
    }
}

/// Fills `out` (length `L^level`) with one block and returns its sum.
fn fill_block(arity: usize, level: u32, rng: &CounterRng, out: &mut [f64]) -> f64 {
    if level == 0 {
        let w = rng.word(0);
        let magnitude = SQRT3 * open01(w);
        let v = if w & 1 == 0 { magnitude } else { -magnitude };
        out[0] = v;
        return v;
    }

    let sub_len = out.len() / arity;
    // parity of negative factors among s_1..s_{L-1} and sgn(t_1)..sgn(t_L)
    let mut negative = false;
    let mut total = 0.0;
    for (i, sub) in out.chunks_exact_mut(sub_len).enumerate() {
        let t = fill_block(arity, level - 1, &rng.split(i as u64), sub);
        if t < 0.0 {
            negative = !negative;
        }
        let flip = if i + 1 < arity {
            let eps_negative = (rng.word((i / 64) as u64) >> (i % 64)) & 1 == 1;
            negative ^= eps_negative;
            eps_negative
        } else {
            // s_L = -(∏ eps)(∏ sgn t): negative iff that parity is even
            !negative
        };
        if flip {
            sub.iter_mut().for_each(|v| *v = -*v);
            total -= t;
        } else {
            total += t;
        }
    }
    total
}

/// Draws one level-`level` block from the stream `rng`.
pub fn build_block(params: &ConstructionParams, level: u32, rng: &CounterRng) -> Result<BlockSample> {
    let len = checked_block_len(params.arity, level)?;
    let mut values = vec![0.0; len];
    fill_block(params.arity, level, rng, &mut values);
    Ok(BlockSample { level, values })
}

/// Sums of the `L^(level-k)` consecutive slices of length `L^k`.
pub fn subblock_sums(block: &BlockSample, arity: usize, k: u32) -> Result<Vec<f64>> {
    if k > block.level {
        return param_err(format!("sub-level {k} exceeds block level {}", block.level));
    }
    let len = checked_block_len(arity, k)?;
    if block.values.len() != checked_block_len(arity, block.level)? {
        return param_err("block length is not L^level");
    }
    Ok(block.values.chunks_exact(len).map(|c| c.iter().sum()).collect())
}

fn fill_blocks(params: &ConstructionParams, blocks: usize, rng: &CounterRng, out: &mut Vec<f64>) {
    let b = params.block_len();
    out.clear();
    out.resize(blocks * b, 0.0);
    let streams = rng.split(TAG_BLOCKS);
    for (j, chunk) in out.chunks_exact_mut(b).enumerate() {
        fill_block(params.arity, params.level, &streams.split(j as u64), chunk);
    }
}

fn fill_y(params: &ConstructionParams, h: usize, rng: &CounterRng, out: &mut Vec<f64>) {
    let b = params.block_len();
    fill_blocks(params, h.div_ceil(b), rng, out);
    out.truncate(h);
}

fn fill_x(params: &ConstructionParams, h: usize, rng: &CounterRng, out: &mut Vec<f64>) {
    let b = params.block_len();
    let tau = rng.split(TAG_SHIFT).next_below(b as u64) as usize;
    fill_blocks(params, (tau + h).div_ceil(b), rng, out);
    out.drain(..tau);
    out.truncate(h);
}

/// Reusable sampler for Monte Carlo loops; avoids per-draw allocation.
#[derive(Clone, Debug)]
pub struct WindowSampler {
    params: ConstructionParams,
    process: Process,
    source: Vec<f64>,
    marks: Vec<u8>,
}

impl WindowSampler {
    pub fn new(params: ConstructionParams, process: Process) -> Self {
        Self {
            params,
            process,
            source: Vec::new(),
            marks: Vec::new(),
        }
    }

    pub fn params(&self) -> &ConstructionParams {
        &self.params
    }

    pub fn process(&self) -> Process {
        self.process
    }

    /// Writes a length-`h` window into `out`. For the thinned process the
    /// marks of the last draw are available from [`WindowSampler::marks`].
    pub fn sample_into(&mut self, h: usize, rng: &CounterRng, out: &mut Vec<f64>) {
        match self.process {
            Process::Y => fill_y(&self.params, h, rng, out),
            Process::X => fill_x(&self.params, h, rng, out),
            Process::XTilde => {
                let marks_rng = rng.split(TAG_MARKS);
                let p = self.params.p;
                self.marks.clear();
                self.marks
                    .extend((0..h as u64).map(|k| u8::from(open01(marks_rng.word(k)) < p)));
                let occupied = self.marks.iter().filter(|&&m| m == 1).count();
                if occupied > 0 {
                    fill_x(&self.params, occupied, &rng.split(TAG_SOURCE), &mut self.source);
                } else {
                    self.source.clear();
                }
                out.clear();
                out.resize(h, 0.0);
                sparsifier::place(&self.source, &self.marks, out);
            }
        }
    }

    pub fn marks(&self) -> &[u8] {
        &self.marks
    }

    pub fn sample(&mut self, h: usize, rng: &CounterRng) -> Result<PathWindow> {
        if h == 0 {
            return param_err("window length must be at least 1");
        }
        let mut values = Vec::with_capacity(h);
        self.sample_into(h, rng, &mut values);
        let marks = (self.process == Process::XTilde).then(|| self.marks.clone());
        Ok(PathWindow {
            start: 0,
            values,
            marks,
            process: self.process,
        })
    }
}

/// `Y[0, h-1]`: concatenated independent level-n blocks, block aligned.
pub fn sample_y_window(params: &ConstructionParams, h: usize, rng: &CounterRng) -> Result<PathWindow> {
    WindowSampler::new(*params, Process::Y).sample(h, rng)
}

/// `X[0, h-1] = Y[τ, τ+h-1]` with τ uniform on `{0, ..., L^n - 1}`.
pub fn sample_x_window(params: &ConstructionParams, h: usize, rng: &CounterRng) -> Result<PathWindow> {
    WindowSampler::new(*params, Process::X).sample(h, rng)
}

/// Thinned window: marks are i.i.d. Bernoulli(p), occupied slots receive
/// consecutive values of an independent `X` window.
pub fn sample_xtilde_window(params: &ConstructionParams, h: usize, rng: &CounterRng) -> Result<PathWindow> {
    WindowSampler::new(*params, Process::XTilde).sample(h, rng)
}

pub fn sample_window(process: Process, params: &ConstructionParams, h: usize, rng: &CounterRng) -> Result<PathWindow> {
    WindowSampler::new(*params, process).sample(h, rng)
}
