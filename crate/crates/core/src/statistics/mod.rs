//! Seeded Monte Carlo estimators.
//!
//! Every estimator splits its replicates into fixed-size shards. Replicate `r`
//! always draws from `root.split(r)`, each shard accumulates sequentially, and
//! shard accumulators are merged in shard order, so estimates are identical
//! for any number of rayon workers.

mod cylinder;
mod independence;
mod ks;
mod mixing;
mod moments;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::rng::CounterRng;

pub use cylinder::{CylinderSpec, Interval, IntervalSet};
pub use independence::{sign_product_census, tuple_independence_discrepancy, DiscrepancyReport, SignCensus};
pub use ks::{dkw_critical_distance, ks_distance, ks_non_detection, normal_cdf, KsComparison};
pub use mixing::{
    cylinder_probabilities, cylinder_probability, level_consistency_gap, mixing_gap, mixing_gap_table, MixingRow,
};
pub use moments::{
    estimate_moment, estimate_normalized_moment, mixture_check, subblock_product_check, MixtureReport,
    SubblockProductReport,
};

/// Replicates per shard. Fixed, so the merge tree never depends on workers.
pub const SHARD_REPS: u64 = 2048;

/// Acceptance band in standard errors.
pub const Z_BAND: f64 = 4.0;

/// A Monte Carlo estimate with its standard error and an optional exact
/// reference.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MomentReport {
    pub estimate: f64,
    pub std_error: f64,
    pub reps: u64,
    pub exact_ref: Option<f64>,
    pub z_score: Option<f64>,
}

impl MomentReport {
    pub fn new(estimate: f64, std_error: f64, reps: u64) -> Self {
        Self {
            estimate,
            std_error,
            reps,
            exact_ref: None,
            z_score: None,
        }
    }

    /// Attaches `reference`; the z-score is set only when `std_error > 0`.
    pub fn with_reference(mut self, reference: f64) -> Self {
        self.exact_ref = Some(reference);
        self.z_score = (self.std_error > 0.0).then(|| (self.estimate - reference) / self.std_error);
        self
    }

    /// Multiplies estimate and standard error by `factor`, keeping any
    /// reference consistent.
    pub fn scaled(self, factor: f64) -> Self {
        let scaled = Self::new(self.estimate * factor, self.std_error * factor.abs(), self.reps);
        match self.exact_ref {
            Some(r) => scaled.with_reference(r * factor),
            None => scaled,
        }
    }

    /// `|estimate - reference| ≤ band · std_error`. Without a reference
    /// this is vacuously true; with zero standard error it requires equality.
    pub fn within(&self, band: f64) -> bool {
        match self.exact_ref {
            None => true,
            Some(r) => (self.estimate - r).abs() <= band * self.std_error,
        }
    }
}

/// Shard accumulators merge in a fixed order.
pub(crate) trait Merge: Send + Sized {
    fn merge(&mut self, other: Self);
}

/// Welford mean/variance with Chan's pairwise merge.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub(crate) struct MeanVar {
    pub n: u64,
    pub mean: f64,
    pub m2: f64,
}

impl MeanVar {
    #[inline]
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            0.0
        } else {
            self.m2 / (self.n - 1) as f64
        }
    }

    pub fn std_error(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }

    pub fn report(&self) -> MomentReport {
        MomentReport::new(self.mean, self.std_error(), self.n)
    }
}

impl Merge for MeanVar {
    fn merge(&mut self, other: Self) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }
}

impl<T: Merge> Merge for Vec<T> {
    fn merge(&mut self, other: Self) {
        for (a, b) in self.iter_mut().zip(other) {
            a.merge(b);
        }
    }
}

impl Merge for u64 {
    fn merge(&mut self, other: Self) {
        *self += other;
    }
}

impl<A: Merge, B: Merge> Merge for (A, B) {
    fn merge(&mut self, other: Self) {
        self.0.merge(other.0);
        self.1.merge(other.1);
    }
}

/// Runs `reps` replicates sharded over the current rayon pool.
pub(crate) fn run_shards<A, S>(
    root: &CounterRng,
    reps: u64,
    init: impl Fn() -> A + Sync,
    scratch: impl Fn() -> S + Sync,
    step: impl Fn(&mut A, &mut S, &CounterRng) + Sync,
) -> A
where
    A: Merge,
{
    let shards = reps.div_ceil(SHARD_REPS);
    let parts: Vec<A> = (0..shards)
        .into_par_iter()
        .map(|shard| {
            let mut acc = init();
            let mut state = scratch();
            let end = ((shard + 1) * SHARD_REPS).min(reps);
            for r in shard * SHARD_REPS..end {
                step(&mut acc, &mut state, &root.split(r));
            }
            acc
        })
        .collect();
    let mut parts = parts.into_iter();
    let mut total = parts.next().unwrap_or_else(&init);
    for p in parts {
        total.merge(p);
    }
    total
}
