//! Binomial CDF evaluated in log space.
//!
//! `log_binom_cdf` finds the largest pmf term in the summed range, then adds
//! the remaining terms relative to it, walking away from the peak with the
//! pmf ratio recurrence. The relative sum lies in `[1, r + 1]`, so nothing
//! overflows and the result keeps full precision even when the CDF itself is
//! far below the smallest normal `f64`. Once `r` reaches the mode the CDF is
//! computed as `ln(1 - tail)` from the upper tail instead.

use crate::error::{Error, Result};

// ln(k!) for k < SMALL_FACTORIALS is summed directly; above that the
// Stirling series is accurate to well below one ulp.
const SMALL_FACTORIALS: u64 = 32;

/// `ln(k!)`.
pub fn ln_factorial(k: u64) -> f64 {
    if k < SMALL_FACTORIALS {
        return (2..=k).map(|i| (i as f64).ln()).sum();
    }
    let x = k as f64;
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    let series = inv * (1.0 / 12.0 - inv2 * (1.0 / 360.0 - inv2 * (1.0 / 1260.0 - inv2 / 1680.0)));
    x * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI * x).ln() + series
}

/// `ln C(n, k)`; `k` must not exceed `n`.
pub fn ln_choose(n: u64, k: u64) -> f64 {
    debug_assert!(k <= n);
    if k == 0 || k == n {
        return 0.0;
    }
    ln_factorial(n) - ln_factorial(k) - ln_factorial(n - k)
}

/// `a · ln(b)` with the convention `0 · ln 0 = 0`.
pub(crate) fn xlny(a: f64, ln_b: f64) -> f64 {
    if a == 0.0 {
        0.0
    } else {
        a * ln_b
    }
}

/// `(ln p, ln(1 - p))`, each computed on the side where it is accurate.
pub(crate) fn ln_p_q(p: f64) -> (f64, f64) {
    if p < 0.5 {
        (p.ln(), (-p).ln_1p())
    } else {
        let q = 1.0 - p;
        ((-q).ln_1p(), q.ln())
    }
}

fn check_args(r: u64, n: u64, p: f64) -> Result<()> {
    if r > n {
        return Err(Error::InvalidArgument(format!(
            "binomial CDF needs r <= n, got r = {r}, n = {n}"
        )));
    }
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidArgument(format!(
            "probability {p} is outside [0, 1]"
        )));
    }
    Ok(())
}

/// `ln C(n,k) + k ln p + (n-k) ln(1-p)`.
pub(crate) fn log_pmf_term(k: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    ln_choose(n, k) + xlny(k as f64, ln_p) + xlny((n - k) as f64, ln_q)
}

/// Binomial pmf `C(n,k) pᵏ (1-p)ⁿ⁻ᵏ`.
pub fn binom_pmf(k: u64, n: u64, p: f64) -> Result<f64> {
    check_args(k, n, p)?;
    let (ln_p, ln_q) = ln_p_q(p);
    Ok(log_pmf_term(k, n, ln_p, ln_q).exp())
}

/// `ln F(r; n, p)` where `F` is the binomial CDF.
///
/// Returns `-inf` only in the exact-zero case `p = 1, r < n`. The result is
/// never positive.
pub fn log_binom_cdf(r: u64, n: u64, p: f64) -> Result<f64> {
    check_args(r, n, p)?;
    if r == n || p == 0.0 {
        return Ok(0.0);
    }
    if p == 1.0 {
        return Ok(f64::NEG_INFINITY);
    }
    let (ln_p, ln_q) = ln_p_q(p);
    // The pmf is unimodal with its peak at floor((n + 1) p).
    let mode = ((((n + 1) as f64) * p).floor() as u64).min(n);
    if r < mode {
        return Ok(log_sum_pmf(0, r, r, n, ln_p, ln_q).min(0.0));
    }
    // Past the peak F is close to 1; the upper tail is small and accurate.
    let tail = log_sum_pmf(r + 1, n, r + 1, n, ln_p, ln_q).exp();
    if tail < 0.5 {
        Ok((-tail).ln_1p())
    } else {
        Ok(log_sum_pmf(0, r, mode, n, ln_p, ln_q).min(0.0))
    }
}

/// `ln Σ_{k=lo}^{hi} pmf(k)` where `peak ∈ [lo, hi]` is the largest term.
fn log_sum_pmf(lo: u64, hi: u64, peak: u64, n: u64, ln_p: f64, ln_q: f64) -> f64 {
    let ln_peak = log_pmf_term(peak, n, ln_p, ln_q);
    // Terms shrink monotonically on both sides of the peak.
    let mut sum = 1.0_f64;
    let odds_down = (ln_q - ln_p).exp();
    let mut term = 1.0_f64;
    for k in (lo + 1..=peak).rev() {
        term *= k as f64 / (n - k + 1) as f64 * odds_down;
        sum += term;
        if term <= sum * 1e-18 {
            break;
        }
    }
    let odds_up = (ln_p - ln_q).exp();
    term = 1.0;
    for k in peak..hi {
        term *= (n - k) as f64 / (k + 1) as f64 * odds_up;
        sum += term;
        if term <= sum * 1e-18 {
            break;
        }
    }
    ln_peak + sum.ln()
}

/// Binomial CDF `Σ_{k=0}^{r} C(n,k) pᵏ (1-p)ⁿ⁻ᵏ`.
pub fn binom_cdf(r: u64, n: u64, p: f64) -> Result<f64> {
    log_binom_cdf(r, n, p).map(f64::exp)
}
