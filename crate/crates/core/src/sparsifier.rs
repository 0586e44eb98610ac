//! The thinning operator `S(W, V)` and its exact distributional consequences.
//!
//! Windows are indexed from 1, so only the marks `κ_1 < κ_2 < ...` inside the
//! window matter; by stationarity of the thinned sequence the origin is
//! immaterial for every window statistic.

use crate::error::{param_err, Result};

/// Positions (1-based, ascending) of the 1-marks in a window.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ThinnedPlacement {
    pub kappa: Vec<usize>,
    pub source_count: usize,
}

fn check_marks(marks: &[u8]) -> Result<()> {
    match marks.iter().position(|&m| m > 1) {
        Some(i) => param_err(format!("mark {} at position {} is not 0 or 1", marks[i], i + 1)),
        None => Ok(()),
    }
}

pub fn kappa_positions(marks: &[u8]) -> Result<ThinnedPlacement> {
    check_marks(marks)?;
    let kappa: Vec<usize> = marks
        .iter()
        .enumerate()
        .filter(|(_, &m)| m == 1)
        .map(|(k, _)| k + 1)
        .collect();
    Ok(ThinnedPlacement {
        source_count: kappa.len(),
        kappa,
    })
}

/// Unchecked placement used by the samplers. `out` must already have the
/// length of `marks`.
pub(crate) fn place(source: &[f64], marks: &[u8], out: &mut [f64]) {
    let mut next = source.iter();
    for (slot, &m) in out.iter_mut().zip(marks) {
        *slot = if m == 1 {
            *next.next().expect("source shorter than mark count")
        } else {
            0.0
        };
    }
}

/// `O[κ_j] = W_j`, `O[k] = 0` where `V_k = 0`.
pub fn sparsify(source: &[f64], marks: &[u8]) -> Result<Vec<f64>> {
    check_marks(marks)?;
    let occupied = marks.iter().filter(|&&m| m == 1).count();
    if occupied != source.len() {
        return param_err(format!("{} source values for {occupied} occupied slots", source.len()));
    }
    let mut out = vec![0.0; marks.len()];
    place(source, marks, &mut out);
    Ok(out)
}

/// `P(W̃_0 ≤ x) = (1-p)·1[x ≥ 0] + p·F_W(x)`.
pub fn cdf_mixture(p: f64, base_cdf_at_x: f64, x: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return param_err(format!("p must lie in (0, 1), got {p}"));
    }
    if !(0.0..=1.0).contains(&base_cdf_at_x) {
        return param_err(format!("base CDF value {base_cdf_at_x} outside [0, 1]"));
    }
    let atom = if x >= 0.0 { 1.0 - p } else { 0.0 };
    Ok(atom + p * base_cdf_at_x)
}

/// Binomial(n, p) probabilities for `j = 0..=n`.
///
/// Built by the ratio recurrence `w_{j+1}/w_j = (n-j)/(j+1) · p/(1-p)` walking
/// outward from the mode, then normalized; nothing overflows and far tails
/// underflow to zero.
pub fn binomial_weights(n: usize, p: f64) -> Vec<f64> {
    let odds = p / (1.0 - p);
    let mode = (((n + 1) as f64) * p).floor().min(n as f64) as usize;
    let mut w = vec![0.0; n + 1];
    w[mode] = 1.0;
    for j in mode..n {
        w[j + 1] = w[j] * ((n - j) as f64 / (j + 1) as f64) * odds;
    }
    for j in (0..mode).rev() {
        w[j] = w[j + 1] * ((j + 1) as f64 / (n - j) as f64) / odds;
    }
    let total: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= total);
    w
}

/// `Σ_{j=1}^{n} C(n,j) p^j (1-p)^{n-j} · base_moments[j-1]` where
/// `base_moments[j-1] = E[S(W, j)]^r`.
pub fn moment_mixture(p: f64, n: usize, r: u32, base_moments: &[f64]) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return param_err(format!("p must lie in (0, 1), got {p}"));
    }
    if n == 0 || r == 0 {
        return param_err("window length and moment order must be positive");
    }
    if base_moments.len() != n {
        return param_err(format!(
            "expected {n} base moments E[S(W,j)]^{r}, got {}",
            base_moments.len()
        ));
    }
    let w = binomial_weights(n, p);
    Ok(w[1..].iter().zip(base_moments).map(|(w, m)| w * m).sum())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn kappa_examples() {
        let k = kappa_positions(&[1, 0, 1, 1]).unwrap();
        assert_eq!(k.kappa, vec![1, 3, 4]);
        assert_eq!(k.source_count, 3);
        assert_eq!(kappa_positions(&[0, 0]).unwrap().kappa, Vec::<usize>::new());
        assert_eq!(kappa_positions(&[1, 1, 1]).unwrap().kappa, vec![1, 2, 3]);
        assert!(kappa_positions(&[0, 2]).is_err());
    }

    #[test]
    fn sparsify_examples() {
        assert_eq!(
            sparsify(&[0.5, -1.0, 1.5], &[1, 0, 1, 1]).unwrap(),
            vec![0.5, 0.0, -1.0, 1.5]
        );
        assert_eq!(sparsify(&[], &[0, 0, 0]).unwrap(), vec![0.0; 3]);
        assert_eq!(sparsify(&[0.7], &[0, 1]).unwrap(), vec![0.0, 0.7]);
        assert!(sparsify(&[1.0, 2.0], &[0, 1]).is_err());
        assert!(sparsify(&[1.0], &[3]).is_err());
    }

    #[test]
    fn cdf_mixture_examples() {
        assert_relative_eq!(cdf_mixture(0.5, 0.5, 0.0).unwrap(), 0.75);
        assert_eq!(cdf_mixture(0.3, 0.0, -1e300).unwrap(), 0.0);
        assert_relative_eq!(cdf_mixture(0.3, 1.0, 3f64.sqrt()).unwrap(), 1.0);
        assert!(cdf_mixture(1.0, 0.5, 0.0).is_err());
        assert!(cdf_mixture(0.5, 1.5, 0.0).is_err());
    }

    #[test]
    fn moment_mixture_examples() {
        assert_relative_eq!(moment_mixture(0.5, 1, 2, &[1.0]).unwrap(), 0.5);
        assert_relative_eq!(moment_mixture(0.5, 2, 2, &[1.0, 2.0]).unwrap(), 1.0);
        // p·n·E W² for pairwise independent unit-variance W
        let base: Vec<f64> = (1..=7).map(|j| j as f64).collect();
        assert_relative_eq!(moment_mixture(0.5, 7, 2, &base).unwrap(), 3.5, epsilon = 1e-14);
        assert_eq!(moment_mixture(0.5, 5, 4, &[0.0; 5]).unwrap(), 0.0);
        assert!(moment_mixture(0.5, 3, 2, &[1.0, 2.0]).is_err());
    }

    #[test]
    fn binomial_weights_match_exact_small_cases() {
        let w = binomial_weights(4, 0.5);
        for (got, want) in w.iter().zip([1.0, 4.0, 6.0, 4.0, 1.0]) {
            assert_relative_eq!(*got, want / 16.0, max_relative = 1e-14);
        }
    }

    #[test]
    fn binomial_weights_large_n_stay_accurate() {
        let n = 10_000;
        let w = binomial_weights(n, 0.5);
        let total: f64 = w.iter().sum();
        assert_relative_eq!(total, 1.0, max_relative = 1e-14);
        let mean: f64 = w.iter().enumerate().map(|(j, w)| j as f64 * w).sum();
        assert_relative_eq!(mean, 5_000.0, max_relative = 1e-12);
        // central term via the ln-gamma route
        let lg = |x: f64| statrs::function::gamma::ln_gamma(x);
        let central = (lg(10_001.0) - 2.0 * lg(5_001.0) - 10_000.0 * 2f64.ln()).exp();
        assert_relative_eq!(w[5_000], central, max_relative = 1e-9);
        // symmetric at p = 1/2
        assert_relative_eq!(w[4_000], w[6_000], max_relative = 1e-12);
    }

    proptest! {
        #[test]
        fn sparsify_places_every_value_in_order(
            marks in proptest::collection::vec(0u8..=1, 0..40),
            seed in any::<u64>(),
        ) {
            let count = marks.iter().filter(|&&m| m == 1).count();
            let source: Vec<f64> = (0..count).map(|i| 1.0 + (seed % 97) as f64 + i as f64).collect();
            let out = sparsify(&source, &marks).unwrap();
            prop_assert_eq!(out.len(), marks.len());
            let placed: Vec<f64> = out.iter().copied().filter(|v| *v != 0.0).collect();
            prop_assert_eq!(&placed, &source);
            for (v, m) in out.iter().zip(&marks) {
                prop_assert_eq!(*v == 0.0, *m == 0);
            }
            let kappa = kappa_positions(&marks).unwrap();
            for (j, k) in kappa.kappa.iter().enumerate() {
                prop_assert_eq!(out[k - 1], source[j]);
            }
        }
    }
}
