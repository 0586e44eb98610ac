use serde::{Deserialize, Serialize};

use super::{run_shards, MeanVar, MomentReport};
use crate::construction::{build_block, ConstructionParams, Process, WindowSampler};
use crate::error::{param_err, Error, Result};
use crate::sparsifier::{binomial_weights, moment_mixture};

pub const MIN_REPS: u64 = 1_000;

fn check_finite(acc: &MeanVar, what: &str) -> Result<()> {
    if acc.mean.is_finite() && acc.m2.is_finite() {
        Ok(())
    } else {
        Err(Error::Numeric(format!("non-finite accumulation in {what}")))
    }
}

/// Sample mean of `(Σ window)^power` over `reps` independent windows.
pub fn estimate_moment(
    process: Process,
    params: &ConstructionParams,
    h: usize,
    power: u32,
    reps: u64,
) -> Result<MomentReport> {
    if reps < MIN_REPS {
        return param_err(format!("at least {MIN_REPS} replicates required, got {reps}"));
    }
    if h == 0 || power == 0 {
        return param_err("window length and power must be at least 1");
    }
    let acc = run_shards(
        &params.stream(),
        reps,
        MeanVar::default,
        || (WindowSampler::new(*params, process), Vec::with_capacity(h)),
        |acc, (sampler, buf), rng| {
            sampler.sample_into(h, rng, buf);
            let s: f64 = buf.iter().sum();
            acc.push(s.powi(power as i32));
        },
    );
    check_finite(&acc, "estimate_moment")?;
    Ok(acc.report())
}

/// Estimate of `E(S(W, h)/√h)^power`.
pub fn estimate_normalized_moment(
    process: Process,
    params: &ConstructionParams,
    h: usize,
    power: u32,
    reps: u64,
) -> Result<MomentReport> {
    let raw = estimate_moment(process, params, h, power, reps)?;
    Ok(raw.scaled((h as f64).powf(-f64::from(power) / 2.0)))
}

/// Direct estimate of `E[S(X̃,h)]^r` next to the binomial mixture of
/// estimated `E[S(X,j)]^r`, `j = 1..=h`, drawn from independent streams.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MixtureReport {
    pub thinned: MomentReport,
    pub mixture: MomentReport,
    pub base: Vec<MomentReport>,
    /// `thinned - mixture` against 0, with the combined standard error.
    pub difference: MomentReport,
}

pub fn mixture_check(params: &ConstructionParams, h: usize, r: u32, reps: u64) -> Result<MixtureReport> {
    if reps < MIN_REPS {
        return param_err(format!("at least {MIN_REPS} replicates required, got {reps}"));
    }
    if h == 0 || r == 0 {
        return param_err("window length and power must be at least 1");
    }
    let root = params.stream();
    let thinned = estimate_moment(Process::XTilde, &params.with_seed(root.split(0).key()), h, r, reps)?;

    let weights = binomial_weights(h, params.p());
    let (mix, base) = run_shards(
        &root.split(1),
        reps,
        || (MeanVar::default(), vec![MeanVar::default(); h]),
        || (WindowSampler::new(*params, Process::X), Vec::with_capacity(h)),
        |(mix, base), (sampler, buf), rng| {
            sampler.sample_into(h, rng, buf);
            let mut prefix = 0.0;
            let mut f = 0.0;
            for (j, v) in buf.iter().enumerate() {
                prefix += v;
                let m = prefix.powi(r as i32);
                base[j].push(m);
                f += weights[j + 1] * m;
            }
            mix.push(f);
        },
    );
    check_finite(&mix, "mixture_check")?;
    let base: Vec<MomentReport> = base.iter().map(MeanVar::report).collect();
    // the mixture is linear in the base moments, so this matches mix.mean
    let means: Vec<f64> = base.iter().map(|b| b.estimate).collect();
    let mixture_value = moment_mixture(params.p(), h, r, &means)?;
    let mixture = MomentReport::new(mixture_value, mix.std_error(), reps);
    let se = thinned.std_error.hypot(mixture.std_error);
    let difference = MomentReport::new(thinned.estimate - mixture.estimate, se, reps).with_reference(0.0);
    Ok(MixtureReport {
        thinned,
        mixture,
        base,
        difference,
    })
}

/// Product of the `L` top sub-block sums of a level-k block against
/// `-(E|t|)^L`, with the floors implied by `E|t| ≥ √(L^{k-1})/2`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SubblockProductReport {
    pub level: u32,
    /// `E[∏ T_i]`.
    pub product: MomentReport,
    /// `E|t|` for one level-(k-1) block sum.
    pub abs_sum: MomentReport,
    /// `-(E|t|)^L` from the estimate above, with delta-method error.
    pub check_value: f64,
    pub check_std_error: f64,
    /// `(product - check_value)` over the combined standard error.
    pub z_score: f64,
    /// Largest product over all draws; negative when every draw is.
    pub max_product: f64,
    pub abs_sum_floor: f64,
    pub product_floor: f64,
}

impl SubblockProductReport {
    pub fn identity_holds(&self, band: f64) -> bool {
        self.z_score.abs() <= band
    }

    pub fn floors_hold(&self) -> bool {
        self.abs_sum.estimate >= self.abs_sum_floor && self.product.estimate.abs() >= self.product_floor
    }
}

#[derive(Clone, Copy, Debug, Default)]
struct ProductAcc {
    product: MeanVar,
    abs_sum: MeanVar,
    max_product: f64,
}

impl super::Merge for ProductAcc {
    fn merge(&mut self, other: Self) {
        self.product.merge(other.product);
        self.abs_sum.merge(other.abs_sum);
        self.max_product = self.max_product.max(other.max_product);
    }
}

pub fn subblock_product_check(params: &ConstructionParams, level: u32, reps: u64) -> Result<SubblockProductReport> {
    if level == 0 {
        return param_err("sub-block products need level at least 1");
    }
    if reps < 10_000 {
        return param_err(format!("at least 10000 replicates required, got {reps}"));
    }
    let arity = params.arity();
    params.with_level(level)?;
    let acc = run_shards(
        &params.stream(),
        reps,
        || ProductAcc {
            max_product: f64::NEG_INFINITY,
            ..Default::default()
        },
        || (),
        |acc, _, rng| {
            let block = build_block(params, level, rng).expect("level validated");
            let sub = block.values.len() / arity;
            let mut prod = 1.0;
            let mut abs_total = 0.0;
            for chunk in block.values.chunks_exact(sub) {
                let t: f64 = chunk.iter().sum();
                prod *= t;
                abs_total += t.abs();
            }
            acc.product.push(prod);
            acc.abs_sum.push(abs_total / arity as f64);
            acc.max_product = acc.max_product.max(prod);
        },
    );
    check_finite(&acc.product, "subblock_product_check")?;
    let l = arity as f64;
    let b = acc.abs_sum.mean;
    let check_value = -b.powi(arity as i32);
    let check_std_error = l * b.powi(arity as i32 - 1) * acc.abs_sum.std_error();
    let product = acc.product.report();
    let combined = product.std_error.hypot(check_std_error);
    let sub_len = l.powi(level as i32 - 1);
    Ok(SubblockProductReport {
        level,
        z_score: (product.estimate - check_value) / combined,
        product,
        abs_sum: acc.abs_sum.report(),
        check_value,
        check_std_error,
        max_product: acc.max_product,
        abs_sum_floor: sub_len.sqrt() / 2.0,
        product_floor: 2f64.powi(-(arity as i32)) * sub_len.powf(l / 2.0),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle;

    fn params(level: u32, seed: u64) -> ConstructionParams {
        ConstructionParams::new(6, level, 0.5, seed).unwrap()
    }

    #[test]
    fn rejects_small_rep_counts() {
        assert!(estimate_moment(Process::X, &params(1, 1), 4, 2, 999).is_err());
        assert!(estimate_moment(Process::X, &params(1, 1), 0, 2, 1000).is_err());
        assert!(subblock_product_check(&params(1, 1), 2, 9_999).is_err());
        assert!(subblock_product_check(&params(1, 1), 0, 10_000).is_err());
    }

    #[test]
    fn thinned_moments_match_closed_forms() {
        let p = params(1, 3);
        let mean = estimate_moment(Process::XTilde, &p, 4, 1, 200_000)
            .unwrap()
            .with_reference(0.0);
        assert!(mean.within(4.0), "{mean:?}");
        let var = estimate_moment(Process::XTilde, &p, 4, 2, 200_000)
            .unwrap()
            .with_reference(2.0);
        assert!(var.within(4.0), "{var:?}");
        let fourth = estimate_moment(Process::XTilde, &p, 2, 4, 200_000)
            .unwrap()
            .with_reference(4.0 * oracle::normalized_fourth_moment(2).unwrap());
        assert!(fourth.within(4.0), "{fourth:?}");
    }

    #[test]
    fn level_one_block_product_matches_parity_value() {
        let r = subblock_product_check(&params(1, 5), 1, 100_000).unwrap();
        let reference = -(3f64.sqrt() / 2.0).powi(6);
        assert!(
            (r.product.estimate - reference).abs() <= 4.0 * r.product.std_error,
            "{r:?}"
        );
        assert!(r.max_product < 0.0);
        assert!(r.identity_holds(4.0));
    }

    #[test]
    fn second_moment_is_linear_in_window_length() {
        let p = params(1, 8);
        let a = estimate_moment(Process::Y, &p, 5, 2, 100_000).unwrap();
        let b = estimate_moment(Process::Y, &p.with_seed(9), 10, 2, 100_000).unwrap();
        let diff = b.estimate - 2.0 * a.estimate;
        assert!(diff.abs() <= 4.0 * b.std_error.hypot(2.0 * a.std_error));
    }

    #[test]
    fn mixture_matches_direct_estimate() {
        let r = mixture_check(&params(1, 21), 6, 2, 50_000).unwrap();
        assert!(r.difference.within(4.0), "{r:?}");
        assert_eq!(r.base.len(), 6);
        // E[S(X,j)]^2 = j
        for (j, b) in r.base.iter().enumerate() {
            assert!((b.estimate - (j + 1) as f64).abs() <= 4.0 * b.std_error);
        }
    }
}
