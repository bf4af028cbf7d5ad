//! Exact Bernoulli numbers.
//!
//! `B_k` follows the convention of the generating function `w / (e^w - 1)`,
//! so `B_1 = -1/2`. Values come from the defining recurrence
//! `sum_{j=0}^{n} C(n+1, j) B_j = 0` and are memoised in a process-wide table.

use std::sync::{OnceLock, RwLock};

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use crate::error::{Error, Result};

pub type Rational = BigRational;

fn table() -> &'static RwLock<Vec<Rational>> {
    static TABLE: OnceLock<RwLock<Vec<Rational>>> = OnceLock::new();
    TABLE.get_or_init(|| RwLock::new(vec![Rational::one()]))
}

/// Row `n` of Pascal's triangle.
fn binomial_row(n: usize) -> Vec<BigInt> {
    let mut row = Vec::with_capacity(n + 1);
    let mut c = BigInt::one();
    row.push(c.clone());
    for j in 0..n {
        c = c * BigInt::from(n - j) / BigInt::from(j + 1);
        row.push(c.clone());
    }
    row
}

fn extend_to(k: usize) {
    let mut t = table().write().expect("bernoulli table poisoned");
    while t.len() <= k {
        let n = t.len();
        if n >= 3 && n % 2 == 1 {
            t.push(Rational::zero());
            continue;
        }
        let row = binomial_row(n + 1);
        let s = t
            .iter()
            .zip(&row)
            .fold(Rational::zero(), |acc, (b, c)| acc + b * Rational::from(c.clone()));
        t.push(-s / Rational::from(BigInt::from(n + 1)));
    }
}

/// The Bernoulli number `B_k`.
pub fn bernoulli(k: usize) -> Rational {
    {
        let t = table().read().expect("bernoulli table poisoned");
        if let Some(b) = t.get(k) {
            return b.clone();
        }
    }
    extend_to(k);
    table().read().expect("bernoulli table poisoned")[k].clone()
}

/// `[B_0, ..., B_{k_max}]`.
pub fn bernoulli_table(k_max: usize) -> Vec<Rational> {
    extend_to(k_max);
    table().read().expect("bernoulli table poisoned")[..=k_max].to_vec()
}

/// Exact binomial coefficient.
pub fn binomial(n: usize, k: usize) -> BigInt {
    if k > n {
        return BigInt::zero();
    }
    let k = k.min(n - k);
    (0..k).fold(BigInt::one(), |c, j| c * BigInt::from(n - j) / BigInt::from(j + 1))
}

pub fn factorial(n: usize) -> BigInt {
    (2..=n).fold(BigInt::one(), |acc, i| acc * BigInt::from(i))
}

/// Serde adapter writing a rational as `"p/q"` (or `"p"` when integral).
pub mod rational_string {
    use super::Rational;
    use serde::{de::Error as _, Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(v)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let s = String::deserialize(d)?;
        s.trim().parse::<Rational>().map_err(D::Error::custom)
    }
}

/// Parses `"4.8"`, `"-1e-3"` or `"12"` into an exact rational.
pub fn parse_decimal(s: &str) -> Result<Rational> {
    let s = s.trim();
    let bad = || Error::Parse(format!("not a decimal number: {s:?}"));
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| bad())?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int.is_empty() && frac.is_empty() || !int.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return Err(bad());
    }
    let digits: BigInt = format!("0{int}{frac}").parse().map_err(|_| bad())?;
    let scale = exp - frac.len() as i32;
    let ten = Rational::from(BigInt::from(10));
    let mut v = Rational::from(digits);
    if scale >= 0 {
        v *= num_traits::pow(ten, scale as usize);
    } else {
        v /= num_traits::pow(ten, (-scale) as usize);
    }
    Ok(if neg { -v } else { v })
}
