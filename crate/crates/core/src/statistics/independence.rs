use serde::{Deserialize, Serialize};

use super::{run_shards, Merge, Z_BAND};
use crate::construction::{ConstructionParams, Process, WindowSampler};
use crate::error::{param_err, Result};

/// Largest gap between a joint cell frequency and the product of its
/// marginal frequencies over a grid of interval products.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiscrepancyReport {
    pub coordinates: Vec<usize>,
    pub cells: usize,
    pub reps: u64,
    pub max_discrepancy: f64,
    /// `Z_BAND` standard errors of the cell attaining `max_discrepancy`.
    pub threshold: f64,
    /// Largest standardized discrepancy over all cells.
    pub max_z: f64,
}

impl DiscrepancyReport {
    pub fn passes(&self) -> bool {
        self.max_z <= Z_BAND
    }
}

#[derive(Clone)]
struct CellCounts {
    joint: Vec<u64>,
    marginal: Vec<u64>,
}

impl Merge for CellCounts {
    fn merge(&mut self, other: Self) {
        self.joint.iter_mut().zip(other.joint).for_each(|(a, b)| *a += b);
        self.marginal.iter_mut().zip(other.marginal).for_each(|(a, b)| *a += b);
    }
}

/// Bins are `(-inf, c_0), [c_0, c_1), ..., [c_last, inf)` for sorted `cuts`.
#[inline]
fn bin_of(cuts: &[f64], x: f64) -> usize {
    cuts.partition_point(|&c| c <= x)
}

/// Joint-vs-product discrepancy for the given coordinates of a window of
/// `process`, on the grid of products of `cuts`-bins.
///
/// Cell standard errors use `√(q(1-q)/reps)` with `q` the product of
/// marginal frequencies, which bounds the delta-method error of the
/// difference under independence.
pub fn tuple_independence_discrepancy(
    process: Process,
    params: &ConstructionParams,
    coordinates: &[usize],
    cuts: &[f64],
    reps: u64,
) -> Result<DiscrepancyReport> {
    let k = coordinates.len();
    if k < 2 || k > params.arity() {
        return param_err(format!("tuple size must lie in [2, {}], got {k}", params.arity()));
    }
    if cuts.is_empty() || cuts.windows(2).any(|w| w[0] >= w[1]) || cuts.iter().any(|c| !c.is_finite()) {
        return param_err("grid cuts must be finite, strictly increasing and nonempty");
    }
    let mut sorted = coordinates.to_vec();
    sorted.sort_unstable();
    if sorted.windows(2).any(|w| w[0] == w[1]) {
        return param_err("coordinates must be distinct");
    }
    if reps == 0 {
        return param_err("at least one replicate required");
    }
    let bins = cuts.len() + 1;
    let cells = bins
        .checked_pow(k as u32)
        .filter(|&c| c <= 1 << 20)
        .ok_or_else(|| crate::error::Error::Parameter(format!("{bins}^{k} grid cells is too many")))?;
    let h = sorted[k - 1] + 1;
    let counts = run_shards(
        &params.stream(),
        reps,
        || CellCounts {
            joint: vec![0; cells],
            marginal: vec![0; k * bins],
        },
        || (WindowSampler::new(*params, process), Vec::with_capacity(h)),
        |acc, (sampler, buf), rng| {
            sampler.sample_into(h, rng, buf);
            let mut cell = 0;
            for (slot, &c) in coordinates.iter().enumerate() {
                let b = bin_of(cuts, buf[c]);
                acc.marginal[slot * bins + b] += 1;
                cell = cell * bins + b;
            }
            acc.joint[cell] += 1;
        },
    );
    let n = reps as f64;
    let mut report = DiscrepancyReport {
        coordinates: coordinates.to_vec(),
        cells,
        reps,
        max_discrepancy: 0.0,
        threshold: 0.0,
        max_z: 0.0,
    };
    for (cell, &joint) in counts.joint.iter().enumerate() {
        let mut rest = cell;
        let mut q = 1.0;
        for slot in (0..k).rev() {
            let b = rest % bins;
            rest /= bins;
            q *= counts.marginal[slot * bins + b] as f64 / n;
        }
        let d = (joint as f64 / n - q).abs();
        let se = (q * (1.0 - q) / n).sqrt();
        let z = if se > 0.0 {
            d / se
        } else if d > 0.0 {
            f64::INFINITY
        } else {
            0.0
        };
        if d > report.max_discrepancy {
            report.max_discrepancy = d;
            report.threshold = Z_BAND * se;
        }
        report.max_z = report.max_z.max(z);
    }
    Ok(report)
}

/// Census of `∏ sgn(Y_k)` over the `L` coordinates of aligned level-1 blocks.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SignCensus {
    pub draws: u64,
    pub negative: u64,
    /// Mean of the sign product; the factorized (independent) value is 0.
    pub mean: f64,
}

impl SignCensus {
    pub fn always_negative(&self) -> bool {
        self.negative == self.draws
    }
}

pub fn sign_product_census(params: &ConstructionParams, reps: u64) -> Result<SignCensus> {
    let level1 = params.with_level(1)?;
    let l = params.arity();
    let negative = run_shards(
        &level1.stream(),
        reps,
        || 0u64,
        || (WindowSampler::new(level1, Process::Y), Vec::with_capacity(l)),
        |acc, (sampler, buf), rng| {
            sampler.sample_into(l, rng, buf);
            let negatives = buf.iter().filter(|v| v.is_sign_negative()).count();
            if negatives % 2 == 1 {
                *acc += 1;
            }
        },
    );
    let mean = if reps == 0 {
        0.0
    } else {
        ((reps - negative) as f64 - negative as f64) / reps as f64
    };
    Ok(SignCensus {
        draws: reps,
        negative,
        mean,
    })
}
