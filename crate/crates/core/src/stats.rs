//! Numerical primitives shared by the audit and simulation modules: the
//! standard-normal quantile, deterministic inverse-transform binomial
//! sampling, truncated-normal sampling, and small summary helpers.
//!
//! The binomial sampler deliberately consumes exactly one uniform variate per
//! sample so that simulation outputs are a pure function of `(seed, draw
//! index)` regardless of the parameter values — library samplers may consume
//! a parameter-dependent number of variates, which would break replay.

use crate::error::{Error, Result};
use rand::Rng;
use rand_distr::StandardNormal;
use statrs::function::gamma::ln_gamma;

// Rational-approximation coefficient tables (Wichura's PPND16), low-order
// term first. Each region evaluates numerator(r) / denominator(r); the
// denominators have an implicit leading 1.
const CENTRAL_NUM: [f64; 8] = [
    3.3871328727963666080,
    1.3314166789178437745e2,
    1.9715909503065514427e3,
    1.3731693765509461125e4,
    4.5921953931549871457e4,
    6.7265770927008700853e4,
    3.3430575583588128105e4,
    2.5090809287301226727e3,
];
const CENTRAL_DEN: [f64; 8] = [
    1.0,
    4.2313330701600911252e1,
    6.8718700749205790830e2,
    5.3941960214247511077e3,
    2.1213794301586595867e4,
    3.9307895800092710610e4,
    2.8729085735721942674e4,
    5.2264952788528545610e3,
];
const MIDDLE_NUM: [f64; 8] = [
    1.42343711074968357734,
    4.63033784615654529590,
    5.76949722146069140550,
    3.64784832476320460504,
    1.27045825245236838258,
    2.41780725177450611770e-1,
    2.27238449892691845833e-2,
    7.74545014278341407640e-4,
];
const MIDDLE_DEN: [f64; 8] = [
    1.0,
    2.05319162663775882187,
    1.67638483018380384940,
    6.89767334985100004550e-1,
    1.48103976427480074590e-1,
    1.51986665636164571966e-2,
    5.47593808499534494600e-4,
    1.05075007164441684324e-9,
];
const FAR_NUM: [f64; 8] = [
    6.65790464350110377720,
    5.46378491116411436990,
    1.78482653991729133580,
    2.96560571828504891230e-1,
    2.65321895265761230930e-2,
    1.24266094738807843860e-3,
    2.71155556874348757815e-5,
    2.01033439929228813265e-7,
];
const FAR_DEN: [f64; 7] = [
    1.0,
    5.99832206555887937690e-1,
    1.36929880922735805310e-1,
    1.48753612908506148525e-2,
    7.86869131145613259100e-4,
    1.84631831751005468180e-5,
    1.42151175831644588870e-7,
];

/// Horner evaluation of a polynomial given low-order-first coefficients.
fn polynomial(coefficients: &[f64], x: f64) -> f64 {
    coefficients.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

/// Inverse CDF of the standard normal distribution (Wichura's rational
/// approximations; absolute error below 1e-15 across the support).
///
/// `p` must lie strictly inside (0, 1).
pub fn normal_quantile(p: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "normal quantile requires a probability strictly inside (0, 1), got {p}"
        )));
    }
    let q = p - 0.5;
    if q.abs() <= 0.425 {
        let r = 0.180625 - q * q;
        return Ok(q * polynomial(&CENTRAL_NUM, r) / polynomial(&CENTRAL_DEN, r));
    }
    let tail_p = if q < 0.0 { p } else { 1.0 - p };
    let r = (-tail_p.ln()).sqrt();
    let value = if r <= 5.0 {
        let r = r - 1.6;
        polynomial(&MIDDLE_NUM, r) / polynomial(&MIDDLE_DEN, r)
    } else {
        let r = r - 5.0;
        polynomial(&FAR_NUM, r) / polynomial(&FAR_DEN, r)
    };
    Ok(if q < 0.0 { -value } else { value })
}

/// Maps a single uniform variate `u` in [0, 1) to a Binomial(n, p) sample by
/// inverting the CDF. Deterministic: equal inputs give equal outputs.
///
/// For small `n` the CDF is accumulated from 0 upward. For large `n` the
/// accumulation starts at the mode and alternates outward so the expected
/// number of probed terms stays O(sqrt(n·p·(1-p))); any fixed ordering of the
/// probability masses yields a correctly distributed sample.
pub fn sample_binomial(n: u64, p: f64, u: f64) -> Result<u64> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "binomial success probability must lie in [0, 1], got {p}"
        )));
    }
    if !(0.0..1.0).contains(&u) {
        return Err(Error::InvalidArgument(format!(
            "uniform variate must lie in [0, 1), got {u}"
        )));
    }
    if n == 0 || p == 0.0 {
        return Ok(0);
    }
    if p == 1.0 {
        return Ok(n);
    }
    // Mirror so the worked probability is at most 1/2; this keeps the
    // from-zero start term (1-p)^n away from underflow for the small-n path.
    if p > 0.5 {
        return Ok(n - binomial_inversion(n, 1.0 - p, 1.0 - u));
    }
    Ok(binomial_inversion(n, p, u))
}

const BINOMIAL_MODE_PATH_THRESHOLD: u64 = 1_000;

/// Inversion core. Requires 0 < p <= 0.5 and u in (0, 1].
fn binomial_inversion(n: u64, p: f64, u: f64) -> u64 {
    let q = 1.0 - p;
    if n < BINOMIAL_MODE_PATH_THRESHOLD {
        let ratio = p / q;
        let mut pmf = q.powi(n as i32);
        let mut cumulative = pmf;
        let mut k = 0u64;
        while cumulative < u && k < n {
            pmf *= (n - k) as f64 / (k + 1) as f64 * ratio;
            k += 1;
            cumulative += pmf;
        }
        // When floating-point undershoot keeps the total below a u at the
        // very top of [0, 1], the loop has already walked k up to n.
        k
    } else {
        let mode = (((n + 1) as f64 * p).floor() as u64).min(n);
        let mut pmf_mode = ln_binomial_pmf(n, p, mode).exp();
        if pmf_mode <= 0.0 {
            pmf_mode = f64::MIN_POSITIVE;
        }
        let mut cumulative = pmf_mode;
        if cumulative >= u {
            return mode;
        }
        let up_ratio = p / q;
        let down_ratio = q / p;
        let (mut up_k, mut up_pmf) = (mode, pmf_mode);
        let (mut down_k, mut down_pmf) = (mode, pmf_mode);
        loop {
            let mut advanced = false;
            if up_k < n {
                up_pmf *= (n - up_k) as f64 / (up_k + 1) as f64 * up_ratio;
                up_k += 1;
                cumulative += up_pmf;
                advanced = true;
                if cumulative >= u {
                    return up_k;
                }
            }
            if down_k > 0 {
                down_pmf *= down_k as f64 / (n - down_k + 1) as f64 * down_ratio;
                down_k -= 1;
                cumulative += down_pmf;
                advanced = true;
                if cumulative >= u {
                    return down_k;
                }
            }
            if !advanced {
                // Entire support accumulated; only reachable when rounding
                // left the total a few ulps below u.
                return mode;
            }
        }
    }
}

fn ln_binomial_pmf(n: u64, p: f64, k: u64) -> f64 {
    let n_f = n as f64;
    let k_f = k as f64;
    ln_gamma(n_f + 1.0) - ln_gamma(k_f + 1.0) - ln_gamma(n_f - k_f + 1.0)
        + k_f * p.ln()
        + (n_f - k_f) * (1.0 - p).ln()
}

/// Number of draws the truncated-normal sampler attempts before giving up
/// and clamping. With bounds anywhere near the bulk of the distribution the
/// fallback is effectively unreachable.
const TRUNCATED_NORMAL_MAX_TRIES: u32 = 1_000;

/// Samples from a Normal(mean, sd) restricted to [lo, hi] by rejection. If
/// no draw lands inside the bounds within the retry budget the final draw is
/// clamped, trading exactness in pathological configurations for guaranteed
/// termination. `sd == 0` degenerates to clamping the mean.
pub fn sample_truncated_normal<R: Rng + ?Sized>(
    rng: &mut R,
    mean: f64,
    sd: f64,
    lo: f64,
    hi: f64,
) -> Result<f64> {
    if !(mean.is_finite() && sd.is_finite() && lo.is_finite() && hi.is_finite()) {
        return Err(Error::InvalidArgument(
            "truncated normal parameters must be finite".into(),
        ));
    }
    if sd < 0.0 {
        return Err(Error::InvalidArgument(format!(
            "standard deviation must be non-negative, got {sd}"
        )));
    }
    if lo > hi {
        return Err(Error::InvalidArgument(format!(
            "truncation bounds are inverted: [{lo}, {hi}]"
        )));
    }
    if sd == 0.0 {
        return Ok(mean.clamp(lo, hi));
    }
    let mut x = mean;
    for _ in 0..TRUNCATED_NORMAL_MAX_TRIES {
        let z: f64 = rng.sample(StandardNormal);
        x = mean + sd * z;
        if (lo..=hi).contains(&x) {
            return Ok(x);
        }
    }
    Ok(x.clamp(lo, hi))
}

/// Linear-interpolation sample quantile (the common "type 7" definition:
/// the order statistics are treated as quantiles at ranks k/(n-1)).
///
/// `values` need not be sorted; it must be non-empty and free of NaN.
pub fn quantile(values: &[f64], q: f64) -> Result<f64> {
    if values.is_empty() {
        return Err(Error::InvalidArgument(
            "quantile of an empty sample is undefined".into(),
        ));
    }
    if !(0.0..=1.0).contains(&q) {
        return Err(Error::InvalidArgument(format!(
            "quantile level must lie in [0, 1], got {q}"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument("quantile input contains NaN".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let h = (sorted.len() - 1) as f64 * q;
    let idx = h.floor() as usize;
    let frac = h - idx as f64;
    if idx + 1 < sorted.len() {
        Ok(sorted[idx] + frac * (sorted[idx + 1] - sorted[idx]))
    } else {
        Ok(sorted[sorted.len() - 1])
    }
}

/// Counts `values` into `bins` equal-width bins over [lo, hi]. Values outside
/// the range are counted into the nearest edge bin; the upper bound itself
/// falls in the last bin.
pub fn histogram(values: &[f64], lo: f64, hi: f64, bins: usize) -> Result<Vec<u64>> {
    if bins == 0 {
        return Err(Error::InvalidArgument(
            "histogram needs at least one bin".into(),
        ));
    }
    if !(lo.is_finite() && hi.is_finite()) || lo >= hi {
        return Err(Error::InvalidArgument(format!(
            "histogram range must be finite with lo < hi, got [{lo}, {hi}]"
        )));
    }
    if values.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidArgument(
            "histogram input contains NaN".into(),
        ));
    }
    let mut counts = vec![0u64; bins];
    let width = hi - lo;
    for &x in values {
        let position = ((x - lo) / width * bins as f64).floor();
        let idx = if position < 0.0 {
            0
        } else {
            (position as usize).min(bins - 1)
        };
        counts[idx] += 1;
    }
    Ok(counts)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

    /// Independent quantile oracle: bisect the statrs normal CDF, which
    /// shares no code with the rational approximation under test.
    ///
    /// Bisection runs only in the lower tail, where CDF values near zero
    /// keep full relative precision; near one the CDF saturates at float
    /// spacing ~1e-16 and dividing by the tiny density would smear z by
    /// ~1e-8. Symmetry covers p > 1/2, and the subtraction `1 - p` is
    /// exact there (Sterbenz), so both sides see the same input.
    fn quantile_by_bisection(p: f64) -> f64 {
        if p > 0.5 {
            return -quantile_by_bisection(1.0 - p);
        }
        let normal = Normal::new(0.0, 1.0).unwrap();
        let (mut lo, mut hi) = (-40.0f64, 0.0f64);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if normal.cdf(mid) < p {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn normal_quantile_matches_reference_values() {
        assert!(normal_quantile(0.5).unwrap().abs() < 1e-15);
        assert!((normal_quantile(0.9).unwrap() - 1.281_551_565_544_600_4).abs() < 1e-12);
        assert!((normal_quantile(0.975).unwrap() - 1.959_963_984_540_054).abs() < 1e-12);
        assert!((normal_quantile(0.995).unwrap() - 2.575_829_303_548_900_4).abs() < 1e-12);
        assert!((normal_quantile(0.999).unwrap() - 3.090_232_306_167_813).abs() < 1e-12);
    }

    #[test]
    fn normal_quantile_agrees_with_cdf_bisection() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut probes: Vec<f64> = (0..1_000).map(|_| rng.random::<f64>()).collect();
        for k in 1..=12 {
            let tail = 10f64.powi(-k);
            probes.push(tail);
            probes.push(1.0 - tail);
        }
        for p in probes {
            if !(p > 0.0 && p < 1.0) {
                continue;
            }
            let ours = normal_quantile(p).unwrap();
            let oracle = quantile_by_bisection(p);
            let tol = 1e-9 * ours.abs().max(1.0);
            assert!(
                (ours - oracle).abs() < tol,
                "quantile mismatch at p={p}: {ours} vs {oracle}"
            );
        }
    }

    #[test]
    fn normal_quantile_is_antisymmetric() {
        for &p in &[0.01, 0.1, 0.3, 0.45, 0.6, 0.9, 0.99] {
            let a = normal_quantile(p).unwrap();
            let b = normal_quantile(1.0 - p).unwrap();
            assert!((a + b).abs() < 1e-12, "asymmetry at p={p}");
        }
    }

    #[test]
    fn normal_quantile_rejects_boundary_probabilities() {
        for p in [0.0, 1.0, -0.2, 1.5, f64::NAN] {
            assert!(normal_quantile(p).is_err());
        }
    }

    #[test]
    fn binomial_edge_cases() {
        assert_eq!(sample_binomial(0, 0.4, 0.7).unwrap(), 0);
        assert_eq!(sample_binomial(25, 0.0, 0.999).unwrap(), 0);
        assert_eq!(sample_binomial(25, 1.0, 0.0).unwrap(), 25);
        assert!(sample_binomial(10, 1.2, 0.5).is_err());
        assert!(sample_binomial(10, -0.1, 0.5).is_err());
        assert!(sample_binomial(10, 0.5, 1.0).is_err());
        assert!(sample_binomial(10, 0.5, -0.01).is_err());
    }

    #[test]
    fn binomial_small_path_inverts_the_reference_cdf() {
        // Probe each outcome at the midpoint of its CDF interval, computed
        // from an independent implementation of the binomial distribution.
        let (n, p) = (30u64, 0.3f64);
        let dist = Binomial::new(p, n).unwrap();
        let mut prev_cdf = 0.0;
        for k in 0..=n {
            let cdf_k = dist.cdf(k);
            let mass = cdf_k - prev_cdf;
            if mass > 1e-12 {
                let u = 0.5 * (prev_cdf + cdf_k);
                assert_eq!(
                    sample_binomial(n, p, u).unwrap(),
                    k,
                    "inversion mismatch at k={k}"
                );
            }
            prev_cdf = cdf_k;
        }
        assert_eq!(sample_binomial(n, p, 1e-15).unwrap(), 0);
    }

    #[test]
    fn binomial_mirrored_path_inverts_the_reference_cdf() {
        let (n, p) = (24u64, 0.82f64);
        let dist = Binomial::new(p, n).unwrap();
        let mut prev_cdf = 0.0;
        for k in 0..=n {
            let cdf_k = dist.cdf(k);
            let mass = cdf_k - prev_cdf;
            if mass > 1e-9 {
                // The mirrored sampler still inverts the natural CDF:
                // because cdf_q(j) = 1 - cdf_p(n - j - 1), outcome k
                // occupies u in [cdf(k-1), cdf(k)) exactly as the
                // direct path does.
                let u = 0.5 * (prev_cdf + cdf_k);
                assert_eq!(
                    sample_binomial(n, p, u).unwrap(),
                    k,
                    "mirrored inversion mismatch at k={k}"
                );
            }
            prev_cdf = cdf_k;
        }
    }

    #[test]
    fn binomial_large_path_matches_analytic_moments() {
        let (n, p) = (5_000u64, 0.37f64);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| sample_binomial(n, p, rng.random()).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (draws.len() - 1) as f64;
        let expected_mean = n as f64 * p;
        let expected_var = n as f64 * p * (1.0 - p);
        // 4-sigma band on the sample mean; 10% band on the variance.
        let mean_tol = 4.0 * (expected_var / draws.len() as f64).sqrt();
        assert!(
            (mean - expected_mean).abs() < mean_tol,
            "mean {mean} vs {expected_mean}"
        );
        assert!(
            (var - expected_var).abs() < 0.1 * expected_var,
            "variance {var} vs {expected_var}"
        );
        assert!(draws.iter().all(|&x| (0.0..=n as f64).contains(&x)));
    }

    #[test]
    fn binomial_large_mirrored_path_matches_analytic_moments() {
        let (n, p) = (2_000u64, 0.75f64);
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| sample_binomial(n, p, rng.random()).unwrap() as f64)
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        let expected_mean = n as f64 * p;
        let expected_var = n as f64 * p * (1.0 - p);
        let mean_tol = 4.0 * (expected_var / draws.len() as f64).sqrt();
        assert!(
            (mean - expected_mean).abs() < mean_tol,
            "mean {mean} vs {expected_mean}"
        );
    }

    #[test]
    fn binomial_is_deterministic_in_its_inputs() {
        for &(n, p, u) in &[
            (100u64, 0.25f64, 0.6180339887f64),
            (5_000, 0.5, 0.112),
            (7, 0.9, 0.0),
        ] {
            assert_eq!(
                sample_binomial(n, p, u).unwrap(),
                sample_binomial(n, p, u).unwrap()
            );
        }
    }

    #[test]
    fn truncated_normal_respects_bounds() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..2_000 {
            let x = sample_truncated_normal(&mut rng, 0.55, 0.2, 0.0, 1.0).unwrap();
            assert!((0.0..=1.0).contains(&x));
        }
    }

    #[test]
    fn truncated_normal_with_wide_bounds_matches_untruncated_moments() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let draws: Vec<f64> = (0..20_000)
            .map(|_| sample_truncated_normal(&mut rng, 2.0, 0.5, -100.0, 100.0).unwrap())
            .collect();
        let mean = draws.iter().sum::<f64>() / draws.len() as f64;
        assert!((mean - 2.0).abs() < 0.02, "mean {mean}");
        let var = draws.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / draws.len() as f64;
        assert!((var.sqrt() - 0.5).abs() < 0.02, "sd {}", var.sqrt());
    }

    #[test]
    fn truncated_normal_degenerate_and_invalid_inputs() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        assert_eq!(
            sample_truncated_normal(&mut rng, 0.9, 0.0, 0.0, 0.5).unwrap(),
            0.5
        );
        assert_eq!(
            sample_truncated_normal(&mut rng, 0.3, 0.0, 0.0, 0.5).unwrap(),
            0.3
        );
        assert!(sample_truncated_normal(&mut rng, 0.0, -1.0, 0.0, 1.0).is_err());
        assert!(sample_truncated_normal(&mut rng, 0.0, 1.0, 2.0, 1.0).is_err());
        assert!(sample_truncated_normal(&mut rng, f64::NAN, 1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn quantile_matches_linear_interpolation_definition() {
        let data = [3.0, 1.0, 4.0, 2.0];
        assert_eq!(quantile(&data, 0.0).unwrap(), 1.0);
        assert_eq!(quantile(&data, 1.0).unwrap(), 4.0);
        assert_eq!(quantile(&data, 0.5).unwrap(), 2.5);
        assert_eq!(quantile(&data, 0.25).unwrap(), 1.75);
        assert_eq!(quantile(&[7.5], 0.3).unwrap(), 7.5);
        assert!(quantile(&[], 0.5).is_err());
        assert!(quantile(&data, 1.5).is_err());
    }

    #[test]
    fn histogram_bins_edges_and_outliers() {
        let values = [0.0, 0.099, 0.1, 0.95, 1.0, -0.4, 1.7];
        let counts = histogram(&values, 0.0, 1.0, 10).unwrap();
        assert_eq!(counts.iter().sum::<u64>(), values.len() as u64);
        assert_eq!(counts[0], 3); // 0.0, 0.099, and the clamped -0.4
        assert_eq!(counts[1], 1); // 0.1 lands exactly on the second bin edge
        assert_eq!(counts[9], 3); // 0.95, the inclusive upper bound, clamped 1.7
        assert!(histogram(&values, 1.0, 0.0, 10).is_err());
        assert!(histogram(&values, 0.0, 1.0, 0).is_err());
    }
}
