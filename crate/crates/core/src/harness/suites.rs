//! The fixed suite catalog. Configs tune scale; what each suite checks is
//! defined here.

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use super::config::ExperimentConfig;
use super::record::{Check, TestEntry};
use crate::construction::{ConstructionParams, Process, SQRT3};
use crate::error::{Error, Result};
use crate::oracle;
use crate::rng::CounterRng;
use crate::sparsifier::cdf_mixture;
use crate::statistics::{
    cylinder_probabilities, estimate_moment, estimate_normalized_moment, ks_non_detection, level_consistency_gap,
    mixing_gap_table, mixture_check, sign_product_census, subblock_product_check, tuple_independence_discrepancy,
    CylinderSpec, Interval, IntervalSet, Z_BAND,
};

pub const SUITES: &[&str] = &[
    "marginal",
    "cdf",
    "mixture",
    "fourth",
    "deficit",
    "subblock",
    "tuplewise",
    "binomial",
    "consistency",
    "mixing",
    "ks",
    "gaussian",
];

/// Least `m` with `max_k |P(β_m ≡ k mod 6) - 1/6| ≤ 1e-6`.
pub const LEAST_EQUIDISTRIBUTED_TRIALS_MOD6: u64 = 89;

/// Least `h` with `|gaussian_mixture_moment(h, 6, 1/2) - 15/8| ≤ 1e-3`.
pub const GAUSSIAN_SETTLING_INDEX_L6: usize = 5625;

pub const EQUIDISTRIBUTION_TOL: f64 = 1e-6;
pub const GAUSSIAN_TOL: f64 = 1e-3;
pub const KS_ALPHA: f64 = 1e-3;
pub const KS_WINDOW: usize = 64;

struct Ctx<'a> {
    cfg: &'a ExperimentConfig,
    root: CounterRng,
}

impl Ctx<'_> {
    /// Parameters at `level` seeded for test number `test`.
    fn params(&self, level: u32, test: u64) -> Result<ConstructionParams> {
        Ok(self
            .cfg
            .params
            .with_level(level)?
            .with_seed(self.root.split(test).key()))
    }

    fn arity(&self) -> usize {
        self.cfg.params.arity()
    }

    fn p(&self) -> f64 {
        self.cfg.params.p()
    }

    fn level(&self) -> u32 {
        self.cfg.params.level()
    }
}

fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3)
    })
}

fn double_factorial(odd: usize) -> f64 {
    (1..=odd).step_by(2).map(|k| k as f64).product()
}

pub(crate) fn run_suite(cfg: &ExperimentConfig, suite: &str) -> Result<Vec<TestEntry>> {
    let ctx = Ctx {
        cfg,
        root: CounterRng::new(cfg.params.seed()).split(fnv1a(suite)),
    };
    match suite {
        "marginal" => marginal(&ctx),
        "cdf" => cdf(&ctx),
        "mixture" => mixture(&ctx),
        "fourth" => fourth(&ctx),
        "deficit" => deficit(&ctx),
        "subblock" => subblock(&ctx),
        "tuplewise" => tuplewise(&ctx),
        "binomial" => binomial(&ctx),
        "consistency" => consistency(&ctx),
        "mixing" => mixing(&ctx),
        "ks" => ks(&ctx),
        "gaussian" => gaussian(&ctx),
        other => Err(Error::UnknownSuite(other.to_string())),
    }
}

fn marginal(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let reps = ctx.cfg.scale.moment_reps;
    let p = ctx.p();
    let refs = [(1, 0.0), (2, p), (4, oracle::thinned_fourth_moment(p, 1)?)];
    refs.iter()
        .enumerate()
        .map(|(i, &(power, reference))| {
            let params = ctx.params(ctx.level(), i as u64)?;
            let r = estimate_moment(Process::XTilde, &params, 1, power, reps)?;
            Ok(TestEntry::z_band(format!("moment/power={power}"), &r, reference))
        })
        .collect()
}

fn uniform_cdf(x: f64) -> f64 {
    ((x + SQRT3) / (2.0 * SQRT3)).clamp(0.0, 1.0)
}

fn cdf(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let grid: Vec<f64> = (0..20).map(|k| (k as f64 - 9.0) / 5.0).collect();
    let specs = grid
        .iter()
        .map(|&x| {
            let set = IntervalSet::new([Interval::new(f64::NEG_INFINITY, false, x, true)?]);
            CylinderSpec::single(1, 0, set)
        })
        .collect::<Result<Vec<_>>>()?;
    let reports = cylinder_probabilities(
        Process::XTilde,
        &ctx.params(ctx.level(), 0)?,
        &specs,
        ctx.cfg.scale.moment_reps,
    )?;
    grid.iter()
        .zip(&reports)
        .map(|(&x, r)| {
            let reference = cdf_mixture(ctx.p(), uniform_cdf(x), x)?;
            Ok(TestEntry::z_band(format!("cdf/x={x}"), r, reference))
        })
        .collect()
}

fn mixture(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let mut out = Vec::new();
    for (i, (h, r)) in [4, 8, 12].into_iter().flat_map(|h| [(h, 2), (h, 4)]).enumerate() {
        let report = mixture_check(&ctx.params(ctx.level(), i as u64)?, h, r, ctx.cfg.scale.moment_reps)?;
        out.push(TestEntry::new(
            format!("mixture/h={h}/r={r}"),
            report.thinned.estimate,
            report.difference.std_error,
            report.mixture.estimate,
            Check::ZBand { band: Z_BAND },
        ));
    }
    Ok(out)
}

fn fourth(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    [1usize, 2, 4, 16]
        .iter()
        .enumerate()
        .map(|(i, &n)| {
            let params = ctx.params(ctx.level(), i as u64)?;
            let r = estimate_normalized_moment(Process::XTilde, &params, n, 4, ctx.cfg.scale.moment_reps)?;
            let reference = oracle::thinned_fourth_moment(ctx.p(), n as u64)? / (n * n) as f64;
            Ok(TestEntry::z_band(format!("normalized_fourth/n={n}"), &r, reference))
        })
        .collect()
}

fn deficit(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let l = ctx.arity();
    let h = 2 * l;
    let power = l as u32;
    let gaussian = double_factorial(l - 1) * (h as f64).powi(l as i32 / 2);
    let bound = gaussian - oracle::deficit_bound(l, 0)?;
    let shifted = oracle::exact_partial_sum_moment_level1(l, h, power, true)?;
    let aligned = oracle::exact_partial_sum_moment_level1(l, h, power, false)?;
    let mc = estimate_moment(Process::X, &ctx.params(1, 0)?, h, power, ctx.cfg.scale.deficit_reps)?;
    Ok(vec![
        TestEntry::new(format!("exact/shifted/h={h}"), shifted, 0.0, bound, Check::AtMost)
            .with_note(format!("gaussian value {gaussian}")),
        TestEntry::new(format!("exact/aligned/h={h}"), aligned, 0.0, bound, Check::AtMost),
        TestEntry::z_band(format!("monte_carlo/shifted/h={h}"), &mc, shifted),
    ])
}

fn subblock(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let reps = ctx.cfg.scale.subblock_reps;
    let l = ctx.arity();
    let one = subblock_product_check(&ctx.params(1, 0)?, 1, reps)?;
    let two = subblock_product_check(&ctx.params(2, 1)?, 2, reps)?;
    let identity_se = two.product.std_error.hypot(two.check_std_error);
    Ok(vec![
        TestEntry::z_band("level1/product", &one.product, -(SQRT3 / 2.0).powi(l as i32)),
        TestEntry::new("level1/max_product", one.max_product, 0.0, 0.0, Check::AtMost),
        TestEntry::new(
            "level2/abs_sum_floor",
            two.abs_sum.estimate,
            two.abs_sum.std_error,
            two.abs_sum_floor,
            Check::AtLeast,
        ),
        TestEntry::new(
            "level2/product_floor",
            two.product.estimate.abs(),
            two.product.std_error,
            two.product_floor,
            Check::AtLeast,
        ),
        TestEntry::new(
            "level2/identity",
            two.product.estimate,
            identity_se,
            two.check_value,
            Check::ZBand { band: Z_BAND },
        ),
    ])
}

/// `k` distinct coordinates from `0..len`, sorted.
fn random_tuple(rng: &mut CounterRng, len: usize, k: usize) -> Vec<usize> {
    let mut pool: Vec<usize> = (0..len).collect();
    for i in 0..k {
        let j = i + rng.next_below((len - i) as u64) as usize;
        pool.swap(i, j);
    }
    let mut t = pool[..k].to_vec();
    t.sort_unstable();
    t
}

fn tuplewise(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let l = ctx.arity();
    let scale = &ctx.cfg.scale;
    let mut picker = ctx.root.split(u64::MAX);
    let mut out = Vec::new();
    for t in 0..scale.tuples {
        let coords = random_tuple(&mut picker, 2 * l, l - 1);
        let r = tuple_independence_discrepancy(
            Process::X,
            &ctx.params(1, t as u64)?,
            &coords,
            &[0.0],
            scale.independence_reps,
        )?;
        let label: Vec<String> = coords.iter().map(usize::to_string).collect();
        out.push(
            TestEntry::new(
                format!("sign_cells/{}", label.join("-")),
                r.max_z,
                0.0,
                Z_BAND,
                Check::AtMost,
            )
            .with_note(format!("max |joint - product| = {:e}", r.max_discrepancy)),
        );
    }
    for (i, coords) in [[0, 1], [0, l]].iter().enumerate() {
        let r = tuple_independence_discrepancy(
            Process::X,
            &ctx.params(1, (scale.tuples + i) as u64)?,
            coords,
            &[-0.9, 0.0, 0.9],
            scale.independence_reps,
        )?;
        out.push(TestEntry::new(
            format!("grid_cells/{}-{}", coords[0], coords[1]),
            r.max_z,
            0.0,
            Z_BAND,
            Check::AtMost,
        ));
    }
    let census = sign_product_census(&ctx.params(1, (scale.tuples + 2) as u64)?, scale.sign_draws)?;
    out.push(
        TestEntry::exact(
            "sign_product/negative_fraction",
            census.negative as f64 / census.draws as f64,
            1.0,
            0.0,
        )
        .with_note(format!("{} of {} draws negative", census.negative, census.draws)),
    );
    Ok(out)
}

fn binomial(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let l = ctx.arity();
    let tol = BigRational::from_float(EQUIDISTRIBUTION_TOL).expect("finite tolerance");
    let dist = oracle::least_equidistributed_trials(l, &tol, 10_000)?
        .ok_or_else(|| Error::Numeric(format!("no equidistributed trial count below 10000 for modulus {l}")))?;
    let mut out = vec![TestEntry::new(
        format!("mod{l}/max_deviation"),
        dist.max_deviation(),
        0.0,
        EQUIDISTRIBUTION_TOL,
        Check::AtMost,
    )
    .with_note(format!("least trials {}", dist.trials()))];
    if l == 6 {
        out.push(TestEntry::exact(
            "mod6/least_trials",
            dist.trials() as f64,
            LEAST_EQUIDISTRIBUTED_TRIALS_MOD6 as f64,
            0.0,
        ));
    }
    let mut worst = (0, f64::INFINITY);
    for h in 1..=64 {
        let v = oracle::binomial_tail_half(h)?;
        if v < worst.1 {
            worst = (h, v);
        }
    }
    out.push(
        TestEntry::new("tail_half/min_h_le_64", worst.1, 0.0, 0.5, Check::AtLeast)
            .with_note(format!("attained at h = {}", worst.0)),
    );
    Ok(out)
}

fn consistency_specs(l: usize) -> Result<Vec<CylinderSpec>> {
    let marks_str = |m: &[u8]| m.iter().map(|b| if *b == 1 { '1' } else { '0' }).collect::<String>();
    let alternating: Vec<u8> = (0..l).map(|i| u8::from(i % 2 == 0)).collect();
    let mut a: Vec<String> = (0..l)
        .step_by(2)
        .map(|i| {
            if i % 4 == 0 {
                format!("{i}:(0,inf)")
            } else {
                format!("{i}:(-inf,0.5]")
            }
        })
        .collect();
    a.push(format!("marks={}", marks_str(&alternating)));
    let b = [
        "0:(0,inf)".to_string(),
        "1:(-inf,0]".to_string(),
        format!("{}:(-0.8,0.8]", l - 1),
        format!("marks={}", "1".repeat(l)),
    ];
    let half: Vec<u8> = (0..l).map(|i| u8::from(i < l / 2)).collect();
    let c = ["0:(-inf,-0.5]".to_string(), format!("marks={}", marks_str(&half))];
    [a.join(";"), b.join(";"), c.join(";")]
        .iter()
        .map(|s| s.parse())
        .collect()
}

fn consistency(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let reps = ctx.cfg.scale.cylinder_reps;
    let single = ["0:(0.5,inf)", "0:(-inf,-0.3]", "0:[-1,0.2];marks=1", "marks=0"];
    let mut out = Vec::new();
    let mut test = 0;
    for s in single {
        let spec: CylinderSpec = s.parse()?;
        let r = level_consistency_gap(&ctx.params(0, test)?, 1, &spec, reps)?;
        out.push(TestEntry::z_band(format!("n=0/m=1/{spec}"), &r, 0.0));
        test += 1;
    }
    for spec in consistency_specs(ctx.arity())? {
        let r = level_consistency_gap(&ctx.params(1, test)?, 2, &spec, reps)?;
        out.push(TestEntry::z_band(format!("n=1/m=2/{spec}"), &r, 0.0));
        test += 1;
    }
    Ok(out)
}

fn mixing(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let scale = &ctx.cfg.scale;
    let a: CylinderSpec = scale.mixing_spec_a.parse()?;
    let b: CylinderSpec = scale.mixing_spec_b.parse()?;
    let rows = mixing_gap_table(&ctx.params(0, 0)?, &a, &b, &scale.n_list, scale.mixing_reps)?;
    Ok(rows
        .iter()
        .map(|row| TestEntry::z_band(format!("gap/N={}", row.lag), &row.gap, 0.0))
        .collect())
}

fn ks(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let c = ks_non_detection(&ctx.params(2, 0)?, KS_WINDOW, ctx.cfg.scale.ks_reps, KS_ALPHA)?;
    Ok(vec![
        TestEntry::new("distance", c.distance, 0.0, c.critical_distance, Check::AtMost).with_note(c.statement),
        TestEntry::new(
            "control_distance",
            c.control_distance,
            0.0,
            c.critical_distance,
            Check::AtMost,
        ),
        TestEntry::new(
            "distance_minus_control",
            (c.distance - c.control_distance).abs(),
            0.0,
            c.critical_distance,
            Check::AtMost,
        ),
    ])
}

fn gaussian(ctx: &Ctx) -> Result<Vec<TestEntry>> {
    let l = ctx.arity();
    let p = ctx.p();
    let order = l as u32;
    let ceiling = double_factorial(l - 1);
    let limit = p.powi(l as i32 / 2) * ceiling;
    let h = oracle::gaussian_mixture_settling_index(order, p, GAUSSIAN_TOL, 1_000_000)?
        .ok_or_else(|| Error::Numeric("Gaussian mixture moment did not settle".into()))?;
    let mut out = Vec::new();
    if l == 6 && p == 0.5 {
        out.push(TestEntry::exact(
            "settling_index",
            h as f64,
            GAUSSIAN_SETTLING_INDEX_L6 as f64,
            0.0,
        ));
    }
    let pr = BigRational::from_float(p).expect("validated p");
    let exact = oracle::gaussian_mixture_moment_exact(h, order, &pr)?;
    let limit_exact = BigRational::from_float(limit).expect("finite limit");
    let deviation = (exact - limit_exact).abs().to_f64().unwrap_or(f64::INFINITY);
    out.push(
        TestEntry::new(
            "deviation_at_settling_index",
            deviation,
            0.0,
            GAUSSIAN_TOL,
            Check::AtMost,
        )
        .with_note(format!(
            "h = {h}, float value {}",
            oracle::gaussian_mixture_moment(h, order, p)?
        )),
    );
    let mut worst = f64::NEG_INFINITY;
    for h in 1..=1000 {
        worst = worst.max(oracle::gaussian_mixture_moment(h, order, p)?);
    }
    out.push(TestEntry::new("max_over_h_le_1000", worst, 0.0, ceiling, Check::AtMost));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn catalog_names_are_distinct() {
        let mut names = SUITES.to_vec();
        names.sort_unstable();
        names.dedup();
        assert_eq!(names.len(), SUITES.len());
    }

    #[test]
    fn random_tuples_are_distinct_and_in_range() {
        let mut rng = CounterRng::new(3);
        for _ in 0..100 {
            let t = random_tuple(&mut rng, 12, 5);
            assert_eq!(t.len(), 5);
            assert!(t.windows(2).all(|w| w[0] < w[1]));
            assert!(t.iter().all(|&c| c < 12));
        }
    }

    #[test]
    fn consistency_specs_fit_one_block() {
        for spec in consistency_specs(6).unwrap() {
            assert_eq!(spec.window_length(), 6);
            assert_eq!(spec.marks().map(<[u8]>::len), Some(6));
        }
        assert_eq!(consistency_specs(8).unwrap()[0].window_length(), 8);
    }

    #[test]
    fn exact_suites_pass_at_defaults() {
        let cfg = ExperimentConfig::default();
        for suite in ["binomial", "gaussian"] {
            let entries = run_suite(&cfg, suite).unwrap();
            assert!(entries.iter().all(TestEntry::passed), "{entries:#?}");
        }
    }

    #[test]
    fn unknown_suite_is_reported() {
        let e = run_suite(&ExperimentConfig::default(), "nope").unwrap_err();
        assert!(matches!(e, Error::UnknownSuite(_)));
    }
}
