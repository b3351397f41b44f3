//! Oracles and fixtures shared by the integration tests.
#![allow(dead_code)]

use chasm::loss::loss_terms;
use chasm::loss::{Batch, FrameRef, LossConfig};
use ndarray::Array2;
use num_bigint::BigUint;
use num_traits::{One, ToPrimitive, Zero};
use rand::Rng;

/// Exact binomial CDF for an `f64` probability, as `(ln F, F as f64)`.
///
/// `p` is dyadic, `p = a / 2^e`, so every pmf term is an integer over
/// `2^(e n)`; the sum is exact and only the final logarithm rounds.
pub fn exact_binom_cdf(r: u64, n: u64, p: f64) -> (f64, f64) {
    exact_binom_cdf_all(n, p)[r as usize]
}

/// `exact_binom_cdf(r, n, p)` for every `r ∈ 0..=n`.
pub fn exact_binom_cdf_all(n: u64, p: f64) -> Vec<(f64, f64)> {
    assert!((0.0..=1.0).contains(&p));
    let (num, e) = dyadic(p);
    let denom = BigUint::one() << e;
    let q_num = &denom - &num;

    let mut p_pows = vec![BigUint::one()];
    let mut q_pows = vec![BigUint::one()];
    for k in 1..=n as usize {
        p_pows.push(&p_pows[k - 1] * &num);
        q_pows.push(&q_pows[k - 1] * &q_num);
    }
    let mut choose = BigUint::one();
    let mut acc = BigUint::zero();
    let total_shift = e * n;
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        if k > 0 {
            choose = choose * BigUint::from(n - k + 1) / BigUint::from(k);
        }
        acc += &choose * &p_pows[k as usize] * &q_pows[(n - k) as usize];
        out.push(ln_and_value(&acc, total_shift));
    }
    out
}

/// Exact upper tail `1 - F(r; n, p)` for every `r ∈ 0..=n`, as `(ln, value)`.
/// The subtraction happens in integers, so values near zero keep full
/// relative precision.
pub fn exact_binom_sf_all(n: u64, p: f64) -> Vec<(f64, f64)> {
    let (num, e) = dyadic(p);
    let denom = BigUint::one() << e;
    let q_num = &denom - &num;
    let total = BigUint::one() << (e * n);
    let mut acc = BigUint::zero();
    let mut choose = BigUint::one();
    let mut out = Vec::with_capacity(n as usize + 1);
    for k in 0..=n {
        if k > 0 {
            choose = choose * BigUint::from(n - k + 1) / BigUint::from(k);
        }
        acc += &choose * num.pow(k as u32) * q_num.pow((n - k) as u32);
        out.push(ln_and_value(&(&total - &acc), e * n));
    }
    out
}

// p = num / 2^e exactly.
fn dyadic(p: f64) -> (BigUint, u64) {
    if p == 0.0 {
        return (BigUint::zero(), 0);
    }
    let bits = p.to_bits();
    let exp = ((bits >> 52) & 0x7ff) as i64;
    let frac = bits & ((1u64 << 52) - 1);
    let (mantissa, e2) = if exp == 0 {
        (frac, -1074)
    } else {
        (frac | (1u64 << 52), exp - 1075)
    };
    // p = mantissa · 2^e2 with e2 < 0 for p ≤ 1 (unless p = 1 exactly).
    if e2 >= 0 {
        (BigUint::from(mantissa) << e2 as u64, 0)
    } else {
        (BigUint::from(mantissa), (-e2) as u64)
    }
}

// (ln(x / 2^shift), x / 2^shift as f64)
fn ln_and_value(x: &BigUint, shift: u64) -> (f64, f64) {
    if x.is_zero() {
        return (f64::NEG_INFINITY, 0.0);
    }
    let bits = x.bits();
    let drop = bits.saturating_sub(64);
    let top = (x >> drop).to_u64().unwrap() as f64;
    let exp2 = drop as i64 - shift as i64;
    let ln = top.ln() + exp2 as f64 * std::f64::consts::LN_2;
    let value = if exp2 < -1100 {
        0.0
    } else {
        top * 2f64.powi(exp2 as i32)
    };
    (ln, value)
}

/// Frames covering all four pair classes once `b ≥ 5`.
pub fn mixed_frames(b: usize) -> Vec<FrameRef> {
    let all = [
        ("a", "1", 0.0),
        ("a", "1", 1.0 / 15.0),
        ("a", "1", 1.0),
        ("a", "2", 5.0),
        ("b", "1", 0.0),
        ("b", "1", 0.1),
        ("a", "2", 5.05),
        ("c", "9", 2.0),
    ];
    all[..b]
        .iter()
        .map(|&(v, s, t)| FrameRef::new(v, s, t))
        .collect()
}

pub fn random_matrix(rng: &mut impl Rng, b: usize, n: usize) -> Array2<f64> {
    Array2::from_shape_fn((b, n), |_| rng.random_range(-2.0..2.0))
}

/// Largest `|analytic - fd| / max(|analytic|, |fd|, floor)` over all entries,
/// with central differences of the total loss.
pub fn max_fd_relative_error(
    batch: &Batch,
    config: &LossConfig,
    analytic: &Array2<f64>,
    step: f64,
    floor: f64,
) -> f64 {
    let mut worst = 0.0_f64;
    for ((i, k), &a) in analytic.indexed_iter() {
        let mut plus = batch.clone();
        plus.x[[i, k]] += step;
        let mut minus = batch.clone();
        minus.x[[i, k]] -= step;
        let fp = loss_terms(&plus, config, None).unwrap().total;
        let fm = loss_terms(&minus, config, None).unwrap().total;
        let fd = (fp - fm) / (2.0 * step);
        let err = (a - fd).abs() / a.abs().max(fd.abs()).max(floor);
        worst = worst.max(err);
    }
    worst
}
