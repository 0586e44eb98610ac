use serde::{Deserialize, Serialize};

use super::{run_shards, CylinderSpec, MomentReport};
use crate::construction::{ConstructionParams, Process, WindowSampler};
use crate::error::{param_err, Result};

use super::moments::MIN_REPS;

fn proportion(successes: u64, reps: u64) -> MomentReport {
    let n = reps as f64;
    let p = successes as f64 / n;
    MomentReport::new(p, (p * (1.0 - p) / n).sqrt(), reps)
}

/// Probabilities of several cylinder events, all evaluated on the same
/// sampled windows.
pub fn cylinder_probabilities(
    process: Process,
    params: &ConstructionParams,
    specs: &[CylinderSpec],
    reps: u64,
) -> Result<Vec<MomentReport>> {
    if reps < MIN_REPS {
        return param_err(format!("at least {MIN_REPS} replicates required, got {reps}"));
    }
    if specs.iter().any(|s| s.marks().is_some()) && process != Process::XTilde {
        return param_err("mark constraints apply only to the thinned process");
    }
    let h = specs.iter().map(CylinderSpec::window_length).max().unwrap_or(0);
    if h == 0 {
        return Ok(Vec::new());
    }
    let hits = run_shards(
        &params.stream(),
        reps,
        || vec![0u64; specs.len()],
        || (WindowSampler::new(*params, process), Vec::with_capacity(h)),
        |acc, (sampler, buf), rng| {
            sampler.sample_into(h, rng, buf);
            for (count, spec) in acc.iter_mut().zip(specs) {
                if spec.matches(buf, sampler.marks()) {
                    *count += 1;
                }
            }
        },
    );
    Ok(hits.into_iter().map(|k| proportion(k, reps)).collect())
}

/// Monte Carlo probability that a window of `process` lies in `spec`.
pub fn cylinder_probability(
    process: Process,
    params: &ConstructionParams,
    spec: &CylinderSpec,
    reps: u64,
) -> Result<MomentReport> {
    Ok(cylinder_probabilities(process, params, std::slice::from_ref(spec), reps)?.remove(0))
}

fn check_block_fit(params: &ConstructionParams, spec: &CylinderSpec, name: &str) -> Result<()> {
    if spec.window_length() > params.block_len() {
        return param_err(format!(
            "{name} spans {} coordinates, more than L^n = {}",
            spec.window_length(),
            params.block_len()
        ));
    }
    Ok(())
}

/// Signed gap `P(head ∈ A, tail ∈ B) - P(A)·P(B)` for the thinned process.
///
/// Each replicate samples one contiguous window; with `b = L^n`, coordinate
/// `i` of `A` sits at `X̃_{-b+1+i}` and coordinate `j` of `B` at `X̃_{lag+j}`.
/// `P(B)` is read off the same tail window, which has the law of
/// `X̃[0, b-1]` by stationarity. The standard error is the delta-method
/// error of the influence function `1_AB - P(B)·1_A - P(A)·1_B`.
pub fn mixing_gap(
    params: &ConstructionParams,
    spec_a: &CylinderSpec,
    spec_b: &CylinderSpec,
    lag: usize,
    reps: u64,
) -> Result<MomentReport> {
    if reps < MIN_REPS {
        return param_err(format!("at least {MIN_REPS} replicates required, got {reps}"));
    }
    let b = params.block_len();
    if lag <= 2 * b {
        return param_err(format!("lag N = {lag} must exceed 2·L^n = {}", 2 * b));
    }
    check_block_fit(params, spec_a, "A")?;
    check_block_fit(params, spec_b, "B")?;
    let tail_start = b - 1 + lag;
    let h = tail_start + spec_b.window_length();
    let counts = run_shards(
        &params.stream(),
        reps,
        || vec![0u64; 3],
        || {
            (
                WindowSampler::new(*params, Process::XTilde),
                Vec::with_capacity(h),
                Vec::new(),
            )
        },
        |acc, (sampler, buf, tail_marks), rng| {
            sampler.sample_into(h, rng, buf);
            let marks = sampler.marks();
            let in_a = spec_a.matches(buf, marks);
            tail_marks.clear();
            tail_marks.extend_from_slice(&marks[tail_start..]);
            let in_b = spec_b.matches(&buf[tail_start..], tail_marks);
            acc[0] += u64::from(in_a);
            acc[1] += u64::from(in_b);
            acc[2] += u64::from(in_a && in_b);
        },
    );
    let n = reps as f64;
    let (pa, pb, pab) = (counts[0] as f64 / n, counts[1] as f64 / n, counts[2] as f64 / n);
    let gap = pab - pa * pb;
    let mean_f = pab - 2.0 * pa * pb;
    let second = pab + pb * pb * pa + pa * pa * pb - 2.0 * pb * pab - 2.0 * pa * pab + 2.0 * pa * pb * pab;
    let var = (second - mean_f * mean_f).max(0.0);
    Ok(MomentReport::new(gap, (var / n).sqrt(), reps).with_reference(0.0))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixingRow {
    pub lag: usize,
    pub gap: MomentReport,
}

/// [`mixing_gap`] over several lags, each from its own sub-stream.
pub fn mixing_gap_table(
    params: &ConstructionParams,
    spec_a: &CylinderSpec,
    spec_b: &CylinderSpec,
    lags: &[usize],
    reps: u64,
) -> Result<Vec<MixingRow>> {
    let root = params.stream();
    lags.iter()
        .map(|&lag| {
            let p = params.with_seed(root.split(lag as u64).key());
            Ok(MixingRow {
                lag,
                gap: mixing_gap(&p, spec_a, spec_b, lag, reps)?,
            })
        })
        .collect()
}

/// Difference of the thinned cylinder probability at level `m` and at the
/// level of `params`, from independent samples.
pub fn level_consistency_gap(
    params: &ConstructionParams,
    higher_level: u32,
    spec: &CylinderSpec,
    reps: u64,
) -> Result<MomentReport> {
    if higher_level <= params.level() {
        return param_err(format!(
            "comparison level {higher_level} must exceed base level {}",
            params.level()
        ));
    }
    check_block_fit(params, spec, "spec")?;
    let root = params.stream();
    let high = params.with_level(higher_level)?.with_seed(root.split(1).key());
    let low = params.with_seed(root.split(2).key());
    let ph = cylinder_probability(Process::XTilde, &high, spec, reps)?;
    let pl = cylinder_probability(Process::XTilde, &low, spec, reps)?;
    Ok(MomentReport::new(ph.estimate - pl.estimate, ph.std_error.hypot(pl.std_error), reps).with_reference(0.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::statistics::IntervalSet;

    fn params(level: u32, seed: u64) -> ConstructionParams {
        ConstructionParams::new(6, level, 0.5, seed).unwrap()
    }

    #[test]
    fn unconstrained_is_certain() {
        let spec = CylinderSpec::unconstrained(3).unwrap();
        let r = cylinder_probability(Process::X, &params(1, 1), &spec, 5_000).unwrap();
        assert_eq!(r.estimate, 1.0);
        assert_eq!(r.std_error, 0.0);
    }

    #[test]
    fn marks_need_the_thinned_process() {
        let spec: CylinderSpec = "marks=01".parse().unwrap();
        assert!(cylinder_probability(Process::X, &params(1, 1), &spec, 5_000).is_err());
    }

    #[test]
    fn spec_and_complement_sum_to_one() {
        let set: IntervalSet = IntervalSet::new(vec!["(0.2,1]".parse().unwrap()]);
        let a = CylinderSpec::single(2, 1, set.clone()).unwrap();
        let b = CylinderSpec::single(2, 1, set.complement()).unwrap();
        let r = cylinder_probabilities(Process::XTilde, &params(1, 4), &[a, b], 20_000).unwrap();
        assert!((r[0].estimate + r[1].estimate - 1.0).abs() <= f64::EPSILON);
    }

    #[test]
    fn positive_half_has_probability_half() {
        let spec: CylinderSpec = "0:(0,sqrt3]".parse().unwrap();
        let r = cylinder_probability(Process::X, &params(0, 2), &spec, 100_000)
            .unwrap()
            .with_reference(0.5);
        assert!(r.within(4.0), "{r:?}");
    }

    #[test]
    fn zero_marks_probability() {
        let spec: CylinderSpec = "0:[-1,1];1:[-1,1];2:[-1,1];marks=000".parse().unwrap();
        let r = cylinder_probability(Process::XTilde, &params(1, 6), &spec, 100_000)
            .unwrap()
            .with_reference(0.125);
        assert!(r.within(4.0), "{r:?}");
    }

    #[test]
    fn mixing_gap_validation_and_trivial_case() {
        let a = CylinderSpec::unconstrained(1).unwrap();
        let b: CylinderSpec = "0:(-inf,-0.3)".parse().unwrap();
        assert!(mixing_gap(&params(0, 1), &a, &b, 2, 10_000).is_err());
        let long = CylinderSpec::unconstrained(2).unwrap();
        assert!(mixing_gap(&params(0, 1), &long, &b, 8, 10_000).is_err());
        let r = mixing_gap(&params(0, 1), &a, &b, 4, 10_000).unwrap();
        assert!(r.estimate.abs() < 1e-12);
    }

    #[test]
    fn level_consistency_validation() {
        let spec = CylinderSpec::unconstrained(2).unwrap();
        assert!(level_consistency_gap(&params(0, 1), 1, &spec, 10_000).is_err());
        assert!(level_consistency_gap(&params(1, 1), 1, &spec, 10_000).is_err());
        let marks: CylinderSpec = "marks=10".parse().unwrap();
        let r = level_consistency_gap(&params(1, 1), 2, &marks, 50_000).unwrap();
        assert!(r.within(4.0), "{r:?}");
    }
}
