//! `ln Gamma`, digamma and polygamma functions on the positive real axis.
//!
//! Every evaluator shifts its argument upward with the recurrence
//! `psi^(n)(w) = psi^(n)(w + 1) - (-1)^n n! / w^(n+1)` until it reaches
//! `T >= max(10, working_bits / 3)`, then sums the Stirling-type asymptotic
//! series at `T`, stopping once a term drops below the relative error target.
//! If the terms start growing before that happens the shift target is doubled.

use std::cell::RefCell;
use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;

use crate::bernoulli::{bernoulli, factorial};
use crate::error::{Error, Result};
use crate::real::{PrecisionPolicy, Real};

/// Upper limit on the number of recurrence steps before giving up.
pub const SHIFT_BUDGET: u64 = 1_000_000;

thread_local! {
    // (precision, order) -> coefficients B_{2k} (2k+n-1)! / (2k)!, k = 1, 2, ...
    // order -1 is the ln Gamma series.
    static SERIES: RefCell<HashMap<(usize, i64), Vec<Real>>> = RefCell::new(HashMap::new());
}

fn series_coefficient_exact(order: i64, k: usize) -> BigRational {
    let b = bernoulli(2 * k);
    // (2k + n - 1)! / (2k)!  for n >= 0, and 1 / (2k (2k - 1)) for n = -1.
    let top = 2 * k as i64 + order - 1;
    let ratio = if top >= 2 * k as i64 {
        BigRational::from(factorial(top as usize) / factorial(2 * k))
    } else {
        BigRational::new(factorial(top as usize), factorial(2 * k))
    };
    b * ratio
}

fn with_series<T>(prec: usize, order: i64, len: usize, f: impl FnOnce(&[Real]) -> T) -> T {
    SERIES.with(|cell| {
        let mut map = cell.borrow_mut();
        let coeffs = map.entry((prec, order)).or_default();
        while coeffs.len() < len {
            let k = coeffs.len() + 1;
            coeffs.push(Real::from_rational(&series_coefficient_exact(order, k), prec));
        }
        f(&coeffs[..len])
    })
}

fn check_positive(t: &Real) -> Result<()> {
    if !t.is_positive() {
        return Err(Error::NonPositiveArgument(t.to_scientific(12)));
    }
    Ok(())
}

fn bits_of(x: &Real) -> i64 {
    x.exponent().unwrap_or(i64::MIN / 4)
}

/// Sum of the asymptotic series `sum_k c_{n,k} T^-(2k+n)` with smallest-term
/// truncation. Returns `None` when the terms stop decreasing before they fall
/// below `2^-prec` relative to `scale`.
fn asymptotic_tail(order: i64, big_t: &Real, scale: &Real, prec: usize) -> Option<Real> {
    let inv = big_t.recip();
    let inv2 = &inv * &inv;
    // T^-(2 + n) for k = 1
    let mut pw = inv2.clone() * inv.powi(order);
    let target = bits_of(scale) - prec as i64;
    let mut sum = Real::zero(prec);
    let mut prev_bits = i64::MAX;
    let mut k = 1usize;
    loop {
        // Grow the coefficient table in chunks.
        let chunk = k + 16;
        let done = with_series(prec, order, chunk, |coeffs| {
            while k < chunk {
                let term = &coeffs[k - 1] * &pw;
                let tb = bits_of(&term);
                if tb > prev_bits {
                    return Some(false);
                }
                sum = &sum + &term;
                if tb < target {
                    return Some(true);
                }
                prev_bits = tb;
                pw = &pw * &inv2;
                k += 1;
            }
            None
        });
        match done {
            Some(true) => return Some(sum),
            Some(false) => return None,
            None if k > 4096 => return None,
            None => {}
        }
    }
}

struct Shifted {
    big_t: Real,
    shifts: u64,
}

fn shift_target(t: &Real, policy: &PrecisionPolicy, attempt: u32) -> Result<Shifted> {
    let base = (policy.working_bits as f64 / 3.0).max(10.0) * f64::from(1u32 << attempt);
    let tf = t.to_f64();
    let shifts = if tf >= base { 0.0 } else { (base - tf).ceil() };
    if shifts > SHIFT_BUDGET as f64 {
        return Err(Error::PrecisionUnreachable(format!(
            "asymptotic series needs more than {SHIFT_BUDGET} recurrence shifts"
        )));
    }
    let shifts = shifts as u64;
    Ok(Shifted {
        big_t: t + &Real::from_u64(shifts, t.precision()),
        shifts,
    })
}

fn working_precision(policy: &PrecisionPolicy) -> usize {
    policy.internal_bits() + 32
}

/// `psi^(n)(t)` for every `n` in `orders`, sharing one set of shifts.
pub fn polygamma_range(
    orders: std::ops::RangeInclusive<usize>,
    t: &Real,
    policy: &PrecisionPolicy,
) -> Result<Vec<Real>> {
    check_positive(t)?;
    let (lo, hi) = (*orders.start(), *orders.end());
    if lo > hi {
        return Ok(Vec::new());
    }
    let p = working_precision(policy);
    let t = t.with_precision(p);

    // Asymptotic values at the shifted argument.
    let mut attempt = 0u32;
    let (shifts, at_big_t) = loop {
        let sh = shift_target(&t, policy, attempt)?;
        let mut vals = Vec::with_capacity(hi - lo + 1);
        let mut ok = true;
        for n in lo..=hi {
            match polygamma_asymptotic(n, &sh.big_t, p) {
                Some(v) => vals.push(v),
                None => {
                    ok = false;
                    break;
                }
            }
        }
        if ok {
            break (sh.shifts, vals);
        }
        attempt += 1;
        if attempt > 20 {
            return Err(Error::PrecisionUnreachable("asymptotic series diverged".into()));
        }
    };
    // sums[n - lo] = sum_i (t + i)^-(n+1)
    let mut sums: Vec<Real> = (lo..=hi).map(|_| Real::zero(p)).collect();
    for i in 0..shifts {
        let w = &t + &Real::from_u64(i, p);
        let inv = w.recip();
        let mut pw = inv.powi(lo as i64 + 1);
        for s in sums.iter_mut() {
            *s = &*s + &pw;
            pw = &pw * &inv;
        }
    }
    let out_prec = policy.internal_bits();
    Ok((lo..=hi)
        .zip(at_big_t)
        .zip(sums)
        .map(|((n, asym), s)| {
            // psi^(n)(t) = psi^(n)(T) - (-1)^n n! sum
            let fact = Real::from_bigint(&factorial(n), p);
            let corr = &fact * &s;
            let mut v = if n % 2 == 0 { &asym - &corr } else { &asym + &corr };
            v.round_to(out_prec);
            v
        })
        .collect())
}

/// Asymptotic expansion of `psi^(n)(T)` for large `T`.
fn polygamma_asymptotic(n: usize, big_t: &Real, p: usize) -> Option<Real> {
    let inv = big_t.recip();
    if n == 0 {
        // psi(T) ~ ln T - 1/(2T) - sum B_{2k} / (2k T^{2k})
        let lead = big_t.ln() - inv.div_i64(2);
        let scale = lead.abs().max(inv.clone());
        let tail = asymptotic_tail(0, big_t, &scale, p)?;
        return Some(lead - tail);
    }
    // (-1)^(n-1) [ (n-1)!/T^n + n!/(2 T^(n+1)) + sum c_{n,k} T^-(2k+n) ]
    let inv_n = inv.powi(n as i64);
    let fnm1 = Real::from_bigint(&factorial(n - 1), p);
    let lead = &fnm1 * &inv_n + (&fnm1 * &inv_n * &inv).mul_i64(n as i64).div_i64(2);
    let tail = asymptotic_tail(n as i64, big_t, &lead, p)?;
    let v = lead + tail;
    Some(if n % 2 == 1 { v } else { -v })
}

/// `psi^(k)(t)`; `k = 0` is the digamma function.
pub fn polygamma(k: usize, t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    Ok(polygamma_range(k..=k, t, policy)?.remove(0))
}

pub fn digamma(t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    polygamma(0, t, policy)
}

pub fn trigamma(t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    polygamma(1, t, policy)
}

/// `ln Gamma(t)` for `t > 0`.
pub fn log_gamma(t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    check_positive(t)?;
    let p = working_precision(policy);
    let t = t.with_precision(p);
    let mut attempt = 0u32;
    loop {
        let sh = shift_target(&t, policy, attempt)?;
        let big_t = &sh.big_t;
        // (T - 1/2) ln T - T + ln(2 pi)/2
        let half = Real::one(p).div_i64(2);
        let lead = (big_t - &half) * big_t.ln() - big_t + (Real::pi(p).mul_i64(2)).ln() * &half;
        let scale = lead.abs().max(big_t.recip());
        if let Some(tail) = asymptotic_tail(-1, big_t, &scale, p) {
            // ln Gamma(t) = ln Gamma(T) - ln prod_{i<N} (t + i)
            let mut prod = Real::one(p);
            for i in 0..sh.shifts {
                prod = &prod * &(&t + &Real::from_u64(i, p));
            }
            let mut v = lead + tail - prod.ln();
            v.round_to(policy.internal_bits());
            return Ok(v);
        }
        attempt += 1;
        if attempt > 20 {
            return Err(Error::PrecisionUnreachable("ln Gamma series diverged".into()));
        }
    }
}

/// `(-1)^n n!` as an exact integer.
pub fn signed_factorial(n: usize) -> BigInt {
    let f = factorial(n);
    if n % 2 == 0 {
        f
    } else {
        -f
    }
}
