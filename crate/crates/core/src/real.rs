//! Arbitrary-precision reals and the precision policy used by every evaluator.
//!
//! `Real` is a thin newtype over [`astro_float::BigFloat`] that remembers the
//! precision it was produced at. Binary operations between values of
//! different precision are carried out at the larger of the two.

use std::cell::RefCell;
use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use astro_float::{BigFloat, Consts, Radix, RoundingMode, Sign, WORD_BIT_SIZE};
use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Smallest working precision accepted anywhere in the crate.
pub const MIN_PRECISION: usize = 24;

const RM: RoundingMode = RoundingMode::ToEven;

thread_local! {
    static CONSTS: RefCell<Consts> = RefCell::new(Consts::new().expect("astro-float constant cache"));
}

fn with_consts<T>(f: impl FnOnce(&mut Consts) -> T) -> T {
    CONSTS.with(|cc| f(&mut cc.borrow_mut()))
}

/// How precisely a quantity should be computed.
///
/// Evaluators run internally at `working_bits + guard_bits` (plus whatever
/// extra they need to absorb cancellation) and promise an error below
/// `2^-(working_bits - guard_bits)` relative to the scale of the result.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    pub working_bits: usize,
    pub guard_bits: usize,
    /// When set, callers that support it re-evaluate at twice the working
    /// precision and compare.
    pub agreement_check: bool,
}

impl PrecisionPolicy {
    pub const DEFAULT_BITS: usize = 128;
    pub const DEFAULT_GUARD: usize = 8;

    pub fn new(working_bits: usize) -> Result<Self> {
        Self::with_guard(working_bits, Self::DEFAULT_GUARD)
    }

    pub fn with_guard(working_bits: usize, guard_bits: usize) -> Result<Self> {
        if working_bits < MIN_PRECISION {
            return Err(Error::InvalidPrecision(format!(
                "working precision {working_bits} is below the minimum of {MIN_PRECISION} bits"
            )));
        }
        if guard_bits < 8 {
            return Err(Error::InvalidPrecision(format!(
                "guard bits {guard_bits} must be at least 8"
            )));
        }
        Ok(Self {
            working_bits,
            guard_bits,
            agreement_check: false,
        })
    }

    /// Precision at which evaluators should compute internally.
    pub fn internal_bits(&self) -> usize {
        self.working_bits + self.guard_bits
    }

    /// Same policy with the working precision doubled.
    pub fn doubled(&self) -> Self {
        Self {
            working_bits: self.working_bits * 2,
            ..*self
        }
    }

    /// Same policy with `extra` more working bits.
    pub fn widened(&self, extra: usize) -> Self {
        Self {
            working_bits: self.working_bits + extra,
            ..*self
        }
    }
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            working_bits: Self::DEFAULT_BITS,
            guard_bits: Self::DEFAULT_GUARD,
            agreement_check: false,
        }
    }
}

/// Arbitrary-precision binary floating point value tagged with its precision.
#[derive(Clone)]
pub struct Real {
    value: BigFloat,
    prec: usize,
}

impl Real {
    fn wrap(value: BigFloat, prec: usize) -> Self {
        Self { value, prec }
    }

    pub fn zero(prec: usize) -> Self {
        Self::from_u64(0, prec)
    }

    pub fn one(prec: usize) -> Self {
        Self::from_i64(1, prec)
    }

    // astro-float rejects integer conversions narrower than one word.
    pub fn from_i64(v: i64, prec: usize) -> Self {
        let mut out = Self::wrap(BigFloat::from_i64(v, prec.max(64)), prec.max(64));
        out.round_to(prec);
        out
    }

    pub fn from_u64(v: u64, prec: usize) -> Self {
        let mut out = Self::wrap(BigFloat::from_u64(v, prec.max(64)), prec.max(64));
        out.round_to(prec);
        out
    }

    pub fn from_f64(v: f64, prec: usize) -> Self {
        Self::wrap(BigFloat::from_f64(v, prec), prec)
    }

    pub fn from_bigint(v: &BigInt, prec: usize) -> Self {
        let (sign, digits) = v.to_u64_digits();
        // Accumulate exactly, then round once.
        let exact = (digits.len() * 64).max(prec) + 64;
        let base = BigFloat::from_f64(18446744073709551616.0, exact);
        let mut acc = BigFloat::from_u64(0, exact);
        for d in digits.iter().rev() {
            acc = acc.mul(&base, exact, RM);
            acc = acc.add(&BigFloat::from_u64(*d, exact), exact, RM);
        }
        if sign == num_bigint::Sign::Minus {
            acc.inv_sign();
        }
        let mut out = Self::wrap(acc, exact);
        out.round_to(prec);
        out
    }

    pub fn from_rational(v: &BigRational, prec: usize) -> Self {
        let p = prec + 16;
        let num = Self::from_bigint(v.numer(), p);
        let den = Self::from_bigint(v.denom(), p);
        let mut q = &num / &den;
        q.round_to(prec);
        q
    }

    /// Parses a decimal literal such as `0.5`, `1e-3` or `-2.25E+4`.
    pub fn parse_decimal(s: &str, prec: usize) -> Result<Self> {
        let trimmed = s.trim();
        let looks_numeric = !trimmed.is_empty()
            && trimmed
                .chars()
                .all(|c| c.is_ascii_digit() || matches!(c, '.' | 'e' | 'E' | '+' | '-'))
            && trimmed.chars().any(|c| c.is_ascii_digit());
        if !looks_numeric {
            return Err(Error::Parse(format!("not a decimal number: {s:?}")));
        }
        let v = with_consts(|cc| BigFloat::parse(trimmed, Radix::Dec, prec, RM, cc));
        if v.is_nan() || v.is_inf() {
            return Err(Error::Parse(format!("not a finite decimal number: {s:?}")));
        }
        Ok(Self::wrap(v, prec))
    }

    pub fn pi(prec: usize) -> Self {
        Self::wrap(with_consts(|cc| cc.pi(prec, RM)), prec)
    }

    pub fn precision(&self) -> usize {
        self.prec
    }

    /// Rounds in place to `prec` bits.
    pub fn round_to(&mut self, prec: usize) {
        self.value
            .set_precision(prec, RM)
            .expect("precision change on a finite value");
        self.prec = prec;
    }

    /// Copy of `self` carried at `prec` bits (rounded if narrower).
    pub fn with_precision(&self, prec: usize) -> Self {
        let mut out = self.clone();
        out.round_to(prec);
        out
    }

    pub fn inner(&self) -> &BigFloat {
        &self.value
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_positive(&self) -> bool {
        !self.value.is_zero() && self.value.is_positive()
    }

    pub fn is_negative(&self) -> bool {
        !self.value.is_zero() && self.value.is_negative()
    }

    pub fn is_finite(&self) -> bool {
        !self.value.is_nan() && !self.value.is_inf()
    }

    pub fn abs(&self) -> Self {
        Self::wrap(self.value.abs(), self.prec)
    }

    pub fn recip(&self) -> Self {
        Self::wrap(self.value.reciprocal(self.prec, RM), self.prec)
    }

    pub fn ln(&self) -> Self {
        let p = self.prec;
        Self::wrap(with_consts(|cc| self.value.ln(p, RM, cc)), p)
    }

    pub fn exp(&self) -> Self {
        let p = self.prec;
        Self::wrap(with_consts(|cc| self.value.exp(p, RM, cc)), p)
    }

    pub fn sqrt(&self) -> Self {
        Self::wrap(self.value.sqrt(self.prec, RM), self.prec)
    }

    /// Integer power; negative exponents go through the reciprocal.
    pub fn powi(&self, n: i64) -> Self {
        let p = self.prec;
        let pos = self.value.powi(n.unsigned_abs() as usize, p + 8, RM);
        let v = if n < 0 { pos.reciprocal(p + 8, RM) } else { pos };
        let mut out = Self::wrap(v, p + 8);
        out.round_to(p);
        out
    }

    /// `self^e` for positive `self`, computed as `exp(e ln self)`.
    pub fn powf(&self, e: &Real) -> Self {
        let p = self.prec.max(e.prec);
        let lx = self.with_precision(p + 16).ln();
        let mut out = (&lx * &e.with_precision(p + 16)).exp();
        out.round_to(p);
        out
    }

    pub fn mul_i64(&self, k: i64) -> Self {
        self * &Real::from_i64(k, self.prec)
    }

    pub fn div_i64(&self, k: i64) -> Self {
        self / &Real::from_i64(k, self.prec)
    }

    /// Binary exponent `e` with `2^(e-1) <= |self| < 2^e`; `None` for zero.
    pub fn exponent(&self) -> Option<i64> {
        if self.value.is_zero() {
            return None;
        }
        self.value.exponent().map(i64::from)
    }

    /// Nearest `f64` (ties to even), saturating to +/-inf or 0 outside range.
    pub fn to_f64(&self) -> f64 {
        if self.value.is_zero() {
            return 0.0;
        }
        match self.exponent() {
            Some(e) if e > 1025 => {
                return if self.is_negative() { f64::NEG_INFINITY } else { f64::INFINITY }
            }
            Some(e) if e < -1080 => return if self.is_negative() { -0.0 } else { 0.0 },
            _ => {}
        }
        self.to_scientific(20).parse::<f64>().unwrap_or(f64::NAN)
    }

    /// Rounds to the nearest integer.
    pub fn round_to_bigint(&self) -> BigInt {
        let (words, bits, sign, exp, _) = match self.value.as_raw_parts() {
            Some(parts) => parts,
            None => return BigInt::zero(),
        };
        if self.value.is_zero() {
            return BigInt::zero();
        }
        let mut mag = BigUint::zero();
        for w in words.iter().rev() {
            mag = (mag << WORD_BIT_SIZE) + BigUint::from(*w);
        }
        // value = mag * 2^(exp - bits)
        let shift = i64::from(exp) - bits as i64;
        let mag = if shift >= 0 {
            mag << (shift as u64)
        } else {
            let s = (-shift) as u64;
            let half = if s > 0 { BigUint::from(1u8) << (s - 1) } else { BigUint::zero() };
            let floor = &mag >> s;
            let rem = &mag - (&floor << s);
            match rem.cmp(&half) {
                Ordering::Greater => floor + 1u8,
                Ordering::Less => floor,
                Ordering::Equal => {
                    if floor.bit(0) {
                        floor + 1u8
                    } else {
                        floor
                    }
                }
            }
        };
        let v = BigInt::from(mag);
        if sign == Sign::Neg {
            -v
        } else {
            v
        }
    }

    /// Decimal scientific notation with `digits` significant digits,
    /// e.g. `1.1600733514893103139e-2`.
    pub fn to_scientific(&self, digits: usize) -> String {
        let digits = digits.max(1);
        if self.value.is_zero() {
            return format!("{}e0", if digits > 1 { format!("0.{}", "0".repeat(digits - 1)) } else { "0".into() });
        }
        let p = self.prec.max(64) + digits * 4 + 64;
        let x = self.with_precision(p).abs();
        // Estimate the decimal exponent from the binary one and correct below.
        let e2 = x.exponent().unwrap_or(0);
        let mut e10 = ((e2 - 1) as f64 * std::f64::consts::LOG10_2).floor() as i64;
        let ten = Real::from_i64(10, p);
        let mut scaled;
        let mut n;
        loop {
            scaled = &x * &ten.powi(digits as i64 - 1 - e10);
            n = scaled.round_to_bigint();
            let s = n.abs().to_string();
            if s.len() > digits {
                e10 += 1;
            } else if s.len() < digits {
                e10 -= 1;
            } else {
                break;
            }
        }
        let s = n.abs().to_string();
        let sign = if self.is_negative() { "-" } else { "" };
        if digits == 1 {
            format!("{sign}{s}e{e10}")
        } else {
            format!("{sign}{}.{}e{e10}", &s[..1], &s[1..])
        }
    }

    /// Number of decimal digits that pin down a `prec`-bit value exactly on
    /// re-parse.
    pub fn roundtrip_digits(prec: usize) -> usize {
        (prec as f64 * std::f64::consts::LOG10_2).ceil() as usize + 3
    }

    pub fn max(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl fmt::Debug for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Real({}, {} bits)", self.to_scientific(24), self.prec)
    }
}

impl fmt::Display for Real {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let digits = f.precision().unwrap_or(20);
        f.write_str(&self.to_scientific(digits))
    }
}

impl PartialEq for Real {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for Real {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl<'a, 'b> $trait<&'b Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: &'b Real) -> Real {
                let p = self.prec.max(rhs.prec);
                Real::wrap(self.value.$method(&rhs.value, p, RM), p)
            }
        }
        impl $trait<Real> for Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                (&self).$method(&rhs)
            }
        }
        impl<'b> $trait<&'b Real> for Real {
            type Output = Real;
            fn $method(self, rhs: &'b Real) -> Real {
                (&self).$method(rhs)
            }
        }
        impl<'a> $trait<Real> for &'a Real {
            type Output = Real;
            fn $method(self, rhs: Real) -> Real {
                self.$method(&rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(BigFloat::neg(&self.value), self.prec)
    }
}

impl Neg for &Real {
    type Output = Real;
    fn neg(self) -> Real {
        Real::wrap(BigFloat::neg(&self.value), self.prec)
    }
}

/// Wire form of a [`Real`]: a decimal string with an explicit digit count
/// and the binary precision it was produced at.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecimalValue {
    pub decimal: String,
    pub digits: usize,
    pub precision_bits: usize,
}

impl From<&Real> for DecimalValue {
    fn from(r: &Real) -> Self {
        let digits = Real::roundtrip_digits(r.prec);
        Self {
            decimal: r.to_scientific(digits),
            digits,
            precision_bits: r.prec,
        }
    }
}

impl TryFrom<DecimalValue> for Real {
    type Error = Error;
    fn try_from(d: DecimalValue) -> Result<Self> {
        Real::parse_decimal(&d.decimal, d.precision_bits)
    }
}

impl Serialize for Real {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        DecimalValue::from(self).serialize(s)
    }
}

impl<'de> Deserialize<'de> for Real {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let dv = DecimalValue::deserialize(d)?;
        Real::try_from(dv).map_err(serde::de::Error::custom)
    }
}
