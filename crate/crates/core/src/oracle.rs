//! Exact reference values: magnitude and Gaussian moments, the level-1 parity
//! algebra, exact partial-sum moments at level 1, the deficit and CLT-gap
//! constants, Gaussian-mixture moments and exact binomial residue laws.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{param_err, Result};
use crate::sparsifier::binomial_weights;

fn check_arity(arity: usize) -> Result<()> {
    if arity < 6 || !arity.is_multiple_of(2) {
        return param_err(format!("L must be even and at least 6, got {arity}"));
    }
    Ok(())
}

fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `E|R|^m = 3^{m/2} / (m+1)` for `R` uniform on `[-√3, √3]`.
pub fn abs_uniform_moment(m: i32) -> Result<f64> {
    if m < 0 {
        return param_err(format!("moment order must be nonnegative, got {m}"));
    }
    Ok(3f64.powf(f64::from(m) / 2.0) / f64::from(m + 1))
}

/// `E Z^order = (order-1)!!` for a standard normal `Z`.
pub fn gaussian_even_moment(order: u32) -> Result<f64> {
    if order % 2 == 1 {
        return param_err(format!("only even Gaussian moments are supported, got {order}"));
    }
    Ok((1..order).step_by(2).map(f64::from).product())
}

/// A product moment `E ∏ Y_k^{e_k}` at level 0 or 1.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MomentQuery {
    coordinates: Vec<(usize, u32)>,
    level: u8,
    shifted: bool,
}

impl MomentQuery {
    pub fn new(coordinates: Vec<(usize, u32)>, level: u8, shifted: bool) -> Result<Self> {
        if level > 1 {
            return param_err(format!(
                "exact product moments exist only for level 0 or 1, got {level}"
            ));
        }
        if coordinates.iter().any(|&(_, e)| e == 0) {
            return param_err("exponents must be at least 1");
        }
        let mut idx: Vec<usize> = coordinates.iter().map(|c| c.0).collect();
        idx.sort_unstable();
        if idx.windows(2).any(|w| w[0] == w[1]) {
            return param_err("coordinate indices must be distinct");
        }
        Ok(Self {
            coordinates,
            level,
            shifted,
        })
    }

    pub fn coordinates(&self) -> &[(usize, u32)] {
        &self.coordinates
    }

    pub fn level(&self) -> u8 {
        self.level
    }

    pub fn shifted(&self) -> bool {
        self.shifted
    }
}

fn signed_uniform_moment(e: u32) -> f64 {
    if e % 2 == 1 {
        0.0
    } else {
        abs_uniform_moment(e as i32).unwrap()
    }
}

/// Parity rule for coordinates all inside one aligned level-1 block: the
/// signs are uniform on the tuples with product -1, magnitudes independent.
fn single_block_moment(arity: usize, coords: &[(usize, u32)]) -> f64 {
    let odd = coords.iter().filter(|c| c.1 % 2 == 1).count();
    let magnitudes: f64 = coords
        .iter()
        .map(|&(_, e)| abs_uniform_moment(e as i32).unwrap())
        .product();
    if odd == 0 {
        magnitudes
    } else if odd == arity {
        -magnitudes
    } else {
        0.0
    }
}

/// Aligned level-1 product moment; distinct blocks factorize.
fn aligned_moment(arity: usize, coords: &[(usize, u32)]) -> f64 {
    let mut sorted = coords.to_vec();
    sorted.sort_unstable_by_key(|c| c.0);
    sorted
        .chunk_by(|a, b| a.0 / arity == b.0 / arity)
        .map(|group| single_block_moment(arity, group))
        .product()
}

/// `E ∏ Y_k^{e_k}` by the parity rule. Unshifted level-1 queries must sit in
/// one aligned block; shifted queries average the aligned value over the
/// `L` shifts of `X⁽¹⁾`.
pub fn parity_moment_level1(arity: usize, query: &MomentQuery) -> Result<f64> {
    check_arity(arity)?;
    let coords = query.coordinates();
    if query.level() == 0 {
        return Ok(coords.iter().map(|&(_, e)| signed_uniform_moment(e)).product());
    }
    if query.shifted() {
        let total: f64 = (0..arity)
            .map(|tau| {
                let moved: Vec<_> = coords.iter().map(|&(i, e)| (i + tau, e)).collect();
                aligned_moment(arity, &moved)
            })
            .sum();
        return Ok(total / arity as f64);
    }
    if let Some(first) = coords.first() {
        let block = first.0 / arity;
        if coords.iter().any(|c| c.0 / arity != block) {
            return param_err("coordinates span two blocks; use exact_partial_sum_moment_level1 for sums");
        }
    }
    Ok(single_block_moment(arity, coords))
}

/// Truncated power series product (coefficients of `x^0..=x^max`).
fn series_mul(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len()];
    for (i, &ai) in a.iter().enumerate() {
        if ai == 0.0 {
            continue;
        }
        for (j, &bj) in b.iter().enumerate().take(a.len() - i) {
            out[i + j] += ai * bj;
        }
    }
    out
}

fn series_pow(base: &[f64], exp: usize) -> Vec<f64> {
    let mut acc = vec![0.0; base.len()];
    acc[0] = 1.0;
    for _ in 0..exp {
        acc = series_mul(&acc, base);
    }
    acc
}

/// Moments `E(Σ_{k∈C} Y_k)^r`, `r = 0..=max_power`, for `count` coordinates
/// of one aligned level-1 block.
///
/// Exponential generating functions: the even-exponent patterns contribute
/// `Even(x)^count`; when the block is complete, patterns with every exponent
/// odd contribute `-Odd(x)^L`; everything else vanishes.
fn block_partial_moments(arity: usize, count: usize, max_power: usize) -> Vec<f64> {
    let even: Vec<f64> = (0..=max_power)
        .map(|e| {
            if e % 2 == 0 {
                abs_uniform_moment(e as i32).unwrap() / factorial(e as u32)
            } else {
                0.0
            }
        })
        .collect();
    let mut egf = series_pow(&even, count);
    if count == arity {
        let odd: Vec<f64> = (0..=max_power)
            .map(|e| {
                if e % 2 == 1 {
                    abs_uniform_moment(e as i32).unwrap() / factorial(e as u32)
                } else {
                    0.0
                }
            })
            .collect();
        let all_odd = series_pow(&odd, arity);
        egf.iter_mut().zip(all_odd).for_each(|(a, b)| *a -= b);
    }
    egf
}

/// Exact `E[S(W, h)]^power` for `W = Y⁽¹⁾` (aligned) or `W = X⁽¹⁾` (shifted:
/// average over the `L` values of the shift).
pub fn exact_partial_sum_moment_level1(arity: usize, h: usize, power: u32, shifted: bool) -> Result<f64> {
    check_arity(arity)?;
    if h < 2 || h > 3 * arity {
        return param_err(format!("h must lie in [2, {}], got {h}", 3 * arity));
    }
    if power == 0 || power % 2 == 1 || power as usize > arity {
        return param_err(format!("power must be even and in [2, {arity}], got {power}"));
    }
    let max = power as usize;
    let shifts = if shifted { arity } else { 1 };
    let mut total = 0.0;
    for tau in 0..shifts {
        // egf of the whole window sum is the product of the block egfs
        let mut egf = vec![0.0; max + 1];
        egf[0] = 1.0;
        let (first, last) = (tau, tau + h - 1);
        for block in first / arity..=last / arity {
            let lo = first.max(block * arity);
            let hi = last.min(block * arity + arity - 1);
            egf = series_mul(&egf, &block_partial_moments(arity, hi - lo + 1, max));
        }
        total += egf[max] * factorial(power);
    }
    Ok(total / shifts as f64)
}

/// `L!·2^{-L}·(L^n)^{L/2}`, the guaranteed `L`-th moment deficit.
pub fn deficit_bound(arity: usize, n: u32) -> Result<f64> {
    check_arity(arity)?;
    let l = arity as f64;
    Ok(factorial(arity as u32) * 2f64.powi(-(arity as i32)) * l.powf(f64::from(n) * l / 2.0))
}

/// `2^{-(5L+4)/2}·L!·L^{-L}`: how far the normalized `L`-th moment of the
/// thinned limit stays below `E(Z/√2)^L` for large `h`.
pub fn clt_gap_constant(arity: usize) -> Result<f64> {
    check_arity(arity)?;
    let l = arity as f64;
    Ok(2f64.powf(-(5.0 * l + 4.0) / 2.0) * factorial(arity as u32) * l.powf(-l))
}

/// `2^{-(5L+2)/2}·L!·L^{-L}`, the gap before the Gaussian-mixture term has
/// converged (valid for every `h ≥ 4L`). Twice [`clt_gap_constant`].
pub fn finite_h_gap_constant(arity: usize) -> Result<f64> {
    check_arity(arity)?;
    let l = arity as f64;
    Ok(2f64.powf(-(5.0 * l + 2.0) / 2.0) * factorial(arity as u32) * l.powf(-l))
}

/// `E(S(ξ̃, h)/√h)^L` for the Bernoulli(p)-thinned i.i.d. standard normal
/// sequence: `h^{-L/2} Σ_j C(h,j) p^j (1-p)^{h-j} j^{L/2} (L-1)!!`.
pub fn gaussian_mixture_moment(h: usize, order: u32, p: f64) -> Result<f64> {
    if h == 0 {
        return param_err("h must be at least 1");
    }
    if !(p > 0.0 && p < 1.0) {
        return param_err(format!("p must lie in (0, 1), got {p}"));
    }
    let gauss = gaussian_even_moment(order)?;
    let half = f64::from(order) / 2.0;
    let hf = h as f64;
    let w = binomial_weights(h, p);
    let sum: f64 = w
        .iter()
        .enumerate()
        .skip(1)
        .map(|(j, w)| w * (j as f64 / hf).powf(half))
        .sum();
    Ok(gauss * sum)
}

/// `(order-1)!!` as an exact integer; `order` must be even.
fn odd_double_factorial(order: u32) -> Result<BigRational> {
    gaussian_even_moment(order)?;
    let mut acc = BigInt::one();
    for k in (1..order).step_by(2) {
        acc *= k;
    }
    Ok(BigRational::from_integer(acc))
}

/// Exact [`gaussian_mixture_moment`] for rational `p`, from the binomial
/// moment polynomial `E β^k = Σ_i S(k,i)·h(h-1)⋯(h-i+1)·p^i`.
pub fn gaussian_mixture_moment_exact(h: usize, order: u32, p: &BigRational) -> Result<BigRational> {
    if h == 0 {
        return param_err("h must be at least 1");
    }
    if !(p > &BigRational::zero() && p < &BigRational::one()) {
        return param_err(format!("p must lie in (0, 1), got {p}"));
    }
    let k = (order / 2) as usize;
    let gauss = odd_double_factorial(order)?;
    // stirling[i] = S(k, i)
    let mut stirling = vec![BigInt::zero(); k + 1];
    stirling[0] = BigInt::one();
    for n in 1..=k {
        for i in (1..=n).rev() {
            stirling[i] = &stirling[i - 1] + BigInt::from(i) * &stirling[i];
        }
        stirling[0] = BigInt::zero();
    }
    let hb = BigInt::from(h);
    let mut falling = BigRational::one();
    let mut p_pow = BigRational::one();
    let mut moment = BigRational::zero();
    for (i, s) in stirling.iter().enumerate().skip(1) {
        falling *= BigRational::from_integer(&hb - BigInt::from(i - 1));
        p_pow *= p;
        moment += BigRational::from_integer(s.clone()) * &falling * &p_pow;
    }
    let scale = BigRational::from_integer(num_traits::pow(hb, k));
    Ok(gauss * moment / scale)
}

/// Smallest `h ≤ max_h` with `|gaussian_mixture_moment(h) - p^{L/2}(L-1)!!| ≤ tol`,
/// decided in exact arithmetic with `p` and `tol` taken as the exact
/// values of their binary representations.
pub fn gaussian_mixture_settling_index(order: u32, p: f64, tol: f64, max_h: usize) -> Result<Option<usize>> {
    let (Some(pr), Some(tr)) = (BigRational::from_float(p), BigRational::from_float(tol)) else {
        return param_err("p and tol must be finite");
    };
    let gauss = odd_double_factorial(order)?;
    let limit = gauss * num_traits::pow(pr.clone(), (order / 2) as usize);
    for h in 1..=max_h {
        let v = gaussian_mixture_moment_exact(h, order, &pr)?;
        if (v - &limit).abs() <= tr {
            return Ok(Some(h));
        }
    }
    Ok(None)
}

/// Exact law of `β_m mod d` for `β_m ~ Binomial(m, 1/2)`, stored as subset
/// counts over the common denominator `2^m`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ResidueDistribution {
    trials: u64,
    counts: Vec<BigUint>,
}

impl ResidueDistribution {
    fn start(modulus: usize) -> Self {
        let mut counts = vec![BigUint::zero(); modulus];
        counts[0] = BigUint::one();
        Self { trials: 0, counts }
    }

    /// One more fair trial: `c'[k] = c[k] + c[k-1 mod d]`.
    fn step(&mut self) {
        let d = self.counts.len();
        let last = self.counts[d - 1].clone();
        for k in (1..d).rev() {
            let prev = self.counts[k - 1].clone();
            self.counts[k] += prev;
        }
        self.counts[0] += last;
        self.trials += 1;
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn modulus(&self) -> usize {
        self.counts.len()
    }

    pub fn counts(&self) -> &[BigUint] {
        &self.counts
    }

    pub fn denominator(&self) -> BigUint {
        BigUint::one() << self.trials
    }

    pub fn ratios(&self) -> Vec<BigRational> {
        let den = BigInt::from(self.denominator());
        self.counts
            .iter()
            .map(|c| BigRational::new(BigInt::from(c.clone()), den.clone()))
            .collect()
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.ratios().iter().map(|r| r.to_f64().unwrap_or(f64::NAN)).collect()
    }

    /// Exact test of `max_k |P(β ≡ k) - 1/d| ≤ tol`.
    pub fn within_uniform(&self, tol: &BigRational) -> bool {
        let uniform = BigRational::new(BigInt::one(), BigInt::from(self.modulus()));
        self.ratios().iter().all(|r| {
            let diff = r - &uniform;
            let abs = if diff < BigRational::zero() { -diff } else { diff };
            &abs <= tol
        })
    }

    /// Largest `|P(β ≡ k) - 1/d|`, rounded to f64 only at the end.
    pub fn max_deviation(&self) -> f64 {
        let uniform = BigRational::new(BigInt::one(), BigInt::from(self.modulus()));
        self.ratios()
            .iter()
            .map(|r| {
                let diff = r - &uniform;
                diff.to_f64().unwrap_or(f64::NAN).abs()
            })
            .fold(0.0, f64::max)
    }
}

/// Exact distribution of `β_m mod d`, `β_m ~ Binomial(m, 1/2)`.
pub fn binomial_mod_distribution(trials: u64, modulus: usize) -> Result<ResidueDistribution> {
    if modulus == 0 {
        return param_err("modulus must be at least 1");
    }
    let mut dist = ResidueDistribution::start(modulus);
    for _ in 0..trials {
        dist.step();
    }
    Ok(dist)
}

/// Sweeps `m = 0, 1, ...` and returns the least `m ≤ max_trials` whose
/// residue law is within `tol` of uniform in every class, with its law.
pub fn least_equidistributed_trials(
    modulus: usize,
    tol: &BigRational,
    max_trials: u64,
) -> Result<Option<ResidueDistribution>> {
    if modulus == 0 {
        return param_err("modulus must be at least 1");
    }
    let mut dist = ResidueDistribution::start(modulus);
    loop {
        if dist.within_uniform(tol) {
            return Ok(Some(dist));
        }
        if dist.trials() >= max_trials {
            return Ok(None);
        }
        dist.step();
    }
}

/// Exact `P(β_h ≥ ⌊h/2⌋)` for `β_h ~ Binomial(h, 1/2)`.
pub fn binomial_tail_half_exact(h: u64) -> Result<BigRational> {
    if h == 0 {
        return param_err("h must be at least 1");
    }
    let mut choose = BigUint::one();
    let mut tail = BigUint::zero();
    for k in 0..=h {
        if k > 0 {
            choose = choose * BigUint::from(h - k + 1) / BigUint::from(k);
        }
        if k >= h / 2 {
            tail += &choose;
        }
    }
    Ok(BigRational::new(BigInt::from(tail), BigInt::from(BigUint::one() << h)))
}

pub fn binomial_tail_half(h: u64) -> Result<f64> {
    Ok(binomial_tail_half_exact(h)?.to_f64().unwrap_or(f64::NAN))
}

/// `E(S(X̃, n)/√n)^4 = 3/4 + 3/(20n)` for the p = 1/2 thinned process.
pub fn normalized_fourth_moment(n: u64) -> Result<f64> {
    if n == 0 {
        return param_err("n must be at least 1");
    }
    Ok(0.75 + 3.0 / (20.0 * n as f64))
}

/// `E[S(X̃, n)]^4 = n·p·9/5 + 3n(n-1)p²` for general thinning probability;
/// uses 4-wise independence and `E X⁴ = 9/5`.
pub fn thinned_fourth_moment(p: f64, n: u64) -> Result<f64> {
    if n == 0 {
        return param_err("n must be at least 1");
    }
    let n = n as f64;
    Ok(n * p * 9.0 / 5.0 + 3.0 * n * (n - 1.0) * p * p)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    /// Brute force: enumerate every exponent vector over the window
    /// coordinates, weight by the multinomial coefficient and apply the
    /// per-block parity rule directly.
    fn brute_force_partial_sum(arity: usize, h: usize, power: u32, shifted: bool) -> f64 {
        fn rec(
            arity: usize,
            coords: &[usize],
            pos: usize,
            left: u32,
            current: &mut Vec<(usize, u32)>,
            acc: &mut f64,
            power: u32,
        ) {
            if pos == coords.len() {
                if left == 0 {
                    let coef = factorial(power) / current.iter().map(|c| factorial(c.1)).product::<f64>();
                    // group by block
                    let mut total = coef;
                    let mut blocks: Vec<usize> = current.iter().map(|c| c.0 / arity).collect();
                    blocks.sort_unstable();
                    blocks.dedup();
                    for b in blocks {
                        let group: Vec<(usize, u32)> = current.iter().copied().filter(|c| c.0 / arity == b).collect();
                        let odd = group.iter().filter(|c| c.1 % 2 == 1).count();
                        let mags: f64 = group
                            .iter()
                            .map(|c| 3f64.powf(c.1 as f64 / 2.0) / (c.1 as f64 + 1.0))
                            .product();
                        total *= if odd == 0 {
                            mags
                        } else if odd == arity {
                            -mags
                        } else {
                            0.0
                        };
                    }
                    *acc += total;
                }
                return;
            }
            for e in 0..=left {
                if e > 0 {
                    current.push((coords[pos], e));
                }
                rec(arity, coords, pos + 1, left - e, current, acc, power);
                if e > 0 {
                    current.pop();
                }
            }
        }
        let shifts = if shifted { arity } else { 1 };
        let mut total = 0.0;
        for tau in 0..shifts {
            let coords: Vec<usize> = (tau..tau + h).collect();
            let mut acc = 0.0;
            rec(arity, &coords, 0, power, &mut Vec::new(), &mut acc, power);
            total += acc;
        }
        total / shifts as f64
    }

    #[test]
    fn magnitude_moments() {
        assert_relative_eq!(abs_uniform_moment(2).unwrap(), 1.0, epsilon = 1e-15);
        assert_relative_eq!(abs_uniform_moment(1).unwrap(), 0.866_025_403_784_438_6, epsilon = 1e-15);
        assert_relative_eq!(abs_uniform_moment(4).unwrap(), 1.8, epsilon = 1e-14);
        assert_relative_eq!(abs_uniform_moment(6).unwrap(), 27.0 / 7.0, epsilon = 1e-14);
        assert_eq!(abs_uniform_moment(0).unwrap(), 1.0);
        assert!(abs_uniform_moment(-1).is_err());
    }

    #[test]
    fn gaussian_moments() {
        assert_eq!(gaussian_even_moment(2).unwrap(), 1.0);
        assert_eq!(gaussian_even_moment(6).unwrap(), 15.0);
        assert_eq!(gaussian_even_moment(6).unwrap() / 8.0, 1.875);
        assert!(gaussian_even_moment(5).is_err());
    }

    #[test]
    fn parity_examples() {
        let q = |c: Vec<(usize, u32)>| MomentQuery::new(c, 1, false).unwrap();
        assert_relative_eq!(parity_moment_level1(6, &q(vec![(3, 2)])).unwrap(), 1.0, epsilon = 1e-15);
        assert_eq!(parity_moment_level1(6, &q(vec![(0, 1), (4, 1)])).unwrap(), 0.0);
        let all: Vec<_> = (0..6).map(|i| (i, 1)).collect();
        assert_relative_eq!(parity_moment_level1(6, &q(all)).unwrap(), -0.421_875, epsilon = 1e-14);
        let second_block: Vec<_> = (6..12).map(|i| (i, 1)).collect();
        assert_relative_eq!(
            parity_moment_level1(6, &q(second_block)).unwrap(),
            -0.421_875,
            epsilon = 1e-14
        );
        assert!(parity_moment_level1(6, &q(vec![(5, 1), (6, 1)])).is_err());
        let even = q(vec![(0, 2), (1, 4), (2, 6)]);
        assert_relative_eq!(
            parity_moment_level1(6, &even).unwrap(),
            1.8 * 27.0 / 7.0,
            epsilon = 1e-13
        );
    }

    #[test]
    fn shifted_parity_is_averaged() {
        // the full six-coordinate product survives only when the window is aligned
        let coords: Vec<_> = (0..6).map(|i| (i, 1)).collect();
        let q = MomentQuery::new(coords, 1, true).unwrap();
        assert_relative_eq!(parity_moment_level1(6, &q).unwrap(), -0.421_875 / 6.0, epsilon = 1e-14);
    }

    #[test]
    fn query_validation() {
        assert!(MomentQuery::new(vec![(0, 1), (0, 2)], 1, false).is_err());
        assert!(MomentQuery::new(vec![(0, 0)], 1, false).is_err());
        assert!(MomentQuery::new(vec![(0, 1)], 2, false).is_err());
        let lvl0 = MomentQuery::new(vec![(0, 2), (9, 4)], 0, false).unwrap();
        assert_relative_eq!(parity_moment_level1(6, &lvl0).unwrap(), 1.8, epsilon = 1e-14);
    }

    #[test]
    fn partial_sum_examples() {
        assert_relative_eq!(
            exact_partial_sum_moment_level1(6, 6, 2, false).unwrap(),
            6.0,
            epsilon = 1e-12
        );
        // 810 + 1800 + 162/7 - 303.75
        let full = 810.0 + 1800.0 + 162.0 / 7.0 - 303.75;
        assert_relative_eq!(
            exact_partial_sum_moment_level1(6, 6, 6, false).unwrap(),
            full,
            max_relative = 1e-13
        );
        assert!(exact_partial_sum_moment_level1(6, 1, 2, false).is_err());
        assert!(exact_partial_sum_moment_level1(6, 19, 2, false).is_err());
        assert!(exact_partial_sum_moment_level1(6, 6, 3, false).is_err());
        assert!(exact_partial_sum_moment_level1(6, 6, 8, false).is_err());
    }

    #[test]
    fn partial_sums_match_brute_force_enumeration() {
        for &(h, power) in &[(2, 2), (5, 4), (6, 6), (7, 6), (9, 4), (12, 6)] {
            for shifted in [false, true] {
                let fast = exact_partial_sum_moment_level1(6, h, power, shifted).unwrap();
                let brute = brute_force_partial_sum(6, h, power, shifted);
                assert_relative_eq!(fast, brute, max_relative = 1e-12);
            }
        }
        // L = 8: a full block with power 8
        let fast = exact_partial_sum_moment_level1(8, 8, 8, false).unwrap();
        assert_relative_eq!(fast, brute_force_partial_sum(8, 8, 8, false), max_relative = 1e-12);
    }

    #[test]
    fn second_moment_equals_h() {
        for h in 2..=18 {
            for shifted in [false, true] {
                let v = exact_partial_sum_moment_level1(6, h, 2, shifted).unwrap();
                assert_relative_eq!(v, h as f64, max_relative = 1e-13);
            }
        }
    }

    #[test]
    fn deficit_at_h12_respects_the_gaussian_bound() {
        let shifted = exact_partial_sum_moment_level1(6, 12, 6, true).unwrap();
        assert!(shifted <= 15.0 * 12f64.powi(3) - 11.25);
    }

    #[test]
    fn deficit_and_gap_constants() {
        assert_relative_eq!(deficit_bound(6, 0).unwrap(), 11.25);
        assert_relative_eq!(deficit_bound(6, 1).unwrap(), 2430.0, max_relative = 1e-14);
        for l in [6, 8, 10] {
            let ratio = deficit_bound(l, 1).unwrap() / deficit_bound(l, 0).unwrap();
            assert_relative_eq!(ratio, (l as f64).powf(l as f64 / 2.0), max_relative = 1e-13);
            let r2 = deficit_bound(l, 3).unwrap() / deficit_bound(l, 2).unwrap();
            assert_relative_eq!(r2, (l as f64).powf(l as f64 / 2.0), max_relative = 1e-13);
            assert_eq!(finite_h_gap_constant(l).unwrap(), 2.0 * clt_gap_constant(l).unwrap());
        }
        assert_relative_eq!(clt_gap_constant(6).unwrap(), 1.177_38e-7, max_relative = 1e-5);
        assert_relative_eq!(
            clt_gap_constant(6).unwrap(),
            720.0 / 46656.0 / 131072.0,
            max_relative = 1e-14
        );
        assert!(deficit_bound(7, 0).is_err());
    }

    #[test]
    fn gaussian_mixture_examples() {
        assert_relative_eq!(gaussian_mixture_moment(1, 6, 0.5).unwrap(), 7.5, epsilon = 1e-14);
        // closed form at p = 1/2: 15·E[β³]/h³ = 15/8 + 45/(8h)
        for h in [1usize, 2, 3, 10, 100, 1000, 5000] {
            let closed = 1.875 + 45.0 / (8.0 * h as f64);
            assert_relative_eq!(
                gaussian_mixture_moment(h, 6, 0.5).unwrap(),
                closed,
                max_relative = 1e-11
            );
        }
        for h in 1..=200 {
            for p in [0.1, 0.5, 0.9] {
                assert!(gaussian_mixture_moment(h, 6, p).unwrap() <= 15.0);
            }
        }
    }

    #[test]
    fn exact_gaussian_mixture_agrees_with_weighted_sum() {
        for p in [0.5, 0.25, 0.8] {
            let pr = BigRational::from_float(p).unwrap();
            for order in [2, 4, 6, 8] {
                for h in [1usize, 2, 7, 64, 1000] {
                    let exact = gaussian_mixture_moment_exact(h, order, &pr).unwrap().to_f64().unwrap();
                    let float = gaussian_mixture_moment(h, order, p).unwrap();
                    assert_relative_eq!(exact, float, max_relative = 1e-11);
                }
            }
        }
        let half = BigRational::new(1.into(), 2.into());
        let at = gaussian_mixture_moment_exact(5625, 6, &half).unwrap();
        assert_eq!(
            at,
            BigRational::new(15.into(), 8.into()) + BigRational::new(1.into(), 1000.into())
        );
        assert!(gaussian_mixture_moment_exact(0, 6, &half).is_err());
    }

    #[test]
    fn settling_index_is_decided_exactly() {
        // 15/8 + 45/(8h) meets 15/8 + 1e-3 exactly at h = 5625
        assert_eq!(
            gaussian_mixture_settling_index(6, 0.5, 1e-3, 10_000).unwrap(),
            Some(5625)
        );
        assert_eq!(gaussian_mixture_settling_index(6, 0.5, 1e-3, 5624).unwrap(), None);
        assert_eq!(gaussian_mixture_settling_index(2, 0.5, 1e-3, 10).unwrap(), Some(1));
    }

    #[test]
    fn residue_examples() {
        let d = binomial_mod_distribution(1, 6).unwrap();
        assert_eq!(d.probabilities(), vec![0.5, 0.5, 0.0, 0.0, 0.0, 0.0]);
        let d = binomial_mod_distribution(5, 6).unwrap();
        let want: Vec<f64> = [1.0, 5.0, 10.0, 10.0, 5.0, 1.0].iter().map(|c| c / 32.0).collect();
        assert_eq!(d.probabilities(), want);
        let d = binomial_mod_distribution(0, 3).unwrap();
        assert_eq!(d.probabilities(), vec![1.0, 0.0, 0.0]);
        assert!(binomial_mod_distribution(3, 0).is_err());
    }

    #[test]
    fn residue_counts_sum_to_denominator() {
        for m in [0u64, 1, 7, 64, 300] {
            for d in [1usize, 2, 6, 36] {
                let dist = binomial_mod_distribution(m, d).unwrap();
                let total: BigUint = dist.counts().iter().sum();
                assert_eq!(total, dist.denominator());
            }
        }
    }

    #[test]
    fn residue_matches_direct_binomial_sum() {
        let m = 40u64;
        let dist = binomial_mod_distribution(m, 7).unwrap();
        let mut expected = vec![BigUint::zero(); 7];
        let mut choose = BigUint::one();
        for k in 0..=m {
            if k > 0 {
                choose = choose * BigUint::from(m - k + 1) / BigUint::from(k);
            }
            expected[(k % 7) as usize] += &choose;
        }
        assert_eq!(dist.counts(), &expected[..]);
    }

    #[test]
    fn tail_half_examples() {
        assert_eq!(binomial_tail_half(1).unwrap(), 1.0);
        assert_eq!(binomial_tail_half(2).unwrap(), 0.75);
        let half = BigRational::new(BigInt::one(), BigInt::from(2));
        for h in 1..=64 {
            assert!(binomial_tail_half_exact(h).unwrap() >= half, "h = {h}");
        }
        assert!(binomial_tail_half(0).is_err());
    }

    #[test]
    fn fourth_moment_formula() {
        assert_relative_eq!(normalized_fourth_moment(1).unwrap(), 0.9, epsilon = 1e-15);
        assert_relative_eq!(normalized_fourth_moment(2).unwrap(), 0.825, epsilon = 1e-15);
        assert!((normalized_fourth_moment(1 << 40).unwrap() - 0.75).abs() < 1e-12);
        for n in [1u64, 2, 4, 16, 1000] {
            let general = thinned_fourth_moment(0.5, n).unwrap() / (n * n) as f64;
            assert_relative_eq!(general, normalized_fourth_moment(n).unwrap(), max_relative = 1e-14);
        }
    }
}
