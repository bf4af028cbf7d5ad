//! Remainders of the Stirling expansion of `ln Gamma` and their derivatives.
//!
//! With `P_n(t) = (t - 1/2) ln t - t + ln(2 pi)/2 + sum_{k=1}^{n} B_{2k} / (2k (2k-1) t^{2k-1})`
//! the remainder is `R_n(t) = (-1)^n [ln Gamma(t) - P_n(t)]` and the functions
//! studied here are the signed derivatives `phi_{n,m}(t) = (-1)^m R_n^{(m)}(t)`.
//!
//! Every function is split as `sign * (ln Gamma)^{(q)}(t) + E(t)` where `E` is
//! an elementary part (`t ln t`, `ln t`, `ln 2 pi` and Laurent terms with exact
//! rational coefficients). Derivatives of `E` are taken symbolically, so no
//! numerical differentiation happens anywhere.

use std::collections::BTreeMap;
use std::fmt;

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{bernoulli, Rational};
use crate::error::{Error, Result};
use crate::polygamma::{log_gamma, polygamma_range};
use crate::real::{PrecisionPolicy, Real};

fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// Closed-form elementary function
/// `a t ln t + b ln t + c ln(2 pi) + sum_e d_e t^e` with rational coefficients.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Elementary {
    pub t_log_t: Rational,
    pub log_t: Rational,
    pub log_two_pi: Rational,
    pub laurent: BTreeMap<i64, Rational>,
}

impl Elementary {
    pub fn add_power(&mut self, exponent: i64, coeff: Rational) {
        let slot = self.laurent.entry(exponent).or_insert_with(Rational::zero);
        *slot += coeff;
        if slot.is_zero() {
            self.laurent.remove(&exponent);
        }
    }

    pub fn scaled(&self, s: &Rational) -> Self {
        Self {
            t_log_t: &self.t_log_t * s,
            log_t: &self.log_t * s,
            log_two_pi: &self.log_two_pi * s,
            laurent: self
                .laurent
                .iter()
                .filter(|(_, c)| !s.is_zero() && !c.is_zero())
                .map(|(e, c)| (*e, c * s))
                .collect(),
        }
    }

    pub fn derivative(&self) -> Self {
        let mut out = Self {
            log_t: self.t_log_t.clone(),
            ..Self::default()
        };
        // d(t ln t) = ln t + 1
        out.add_power(0, self.t_log_t.clone());
        // d(ln t) = 1/t
        out.add_power(-1, self.log_t.clone());
        for (e, c) in &self.laurent {
            if *e != 0 {
                out.add_power(e - 1, c * Rational::from(BigInt::from(*e)));
            }
        }
        out
    }

    pub fn nth_derivative(&self, q: usize) -> Self {
        (0..q).fold(self.clone(), |f, _| f.derivative())
    }

    pub fn has_logs(&self) -> bool {
        !(self.t_log_t.is_zero() && self.log_t.is_zero() && self.log_two_pi.is_zero())
    }

    /// Exact value at a rational point when no logarithms are present.
    pub fn eval_rational(&self, t: &Rational) -> Option<Rational> {
        if self.has_logs() || t.is_zero() {
            return None;
        }
        Some(self.laurent.iter().fold(Rational::zero(), |acc, (e, c)| {
            let p = num_traits::pow(t.clone(), e.unsigned_abs() as usize);
            let p = if *e < 0 { p.recip() } else { p };
            acc + c * p
        }))
    }

    pub fn eval(&self, t: &Real) -> Real {
        let p = t.precision();
        let mut acc = Real::zero(p);
        if !self.t_log_t.is_zero() || !self.log_t.is_zero() {
            let lt = t.ln();
            if !self.t_log_t.is_zero() {
                acc = acc + Real::from_rational(&self.t_log_t, p) * t * &lt;
            }
            if !self.log_t.is_zero() {
                acc = acc + Real::from_rational(&self.log_t, p) * &lt;
            }
        }
        if !self.log_two_pi.is_zero() {
            acc = acc + Real::from_rational(&self.log_two_pi, p) * Real::pi(p).mul_i64(2).ln();
        }
        for (e, c) in &self.laurent {
            acc = acc + Real::from_rational(c, p) * t.powi(*e);
        }
        acc
    }
}

/// `c_k = B_{2k} / (2k (2k - 1))`, the coefficients of the Stirling series.
pub fn stirling_coefficient(k: usize) -> Rational {
    let two_k = (2 * k) as i64;
    bernoulli(2 * k) / rat(two_k * (two_k - 1), 1)
}

/// The truncated expansion `P_n` as an exact elementary function.
pub fn asymptotic_partial_sum_exact(n: usize, m: usize) -> Elementary {
    let mut p = Elementary {
        t_log_t: Rational::one(),
        log_t: rat(-1, 2),
        log_two_pi: rat(1, 2),
        ..Elementary::default()
    };
    p.add_power(1, rat(-1, 1));
    for k in 1..=n {
        p.add_power(1 - 2 * k as i64, stirling_coefficient(k));
    }
    p.nth_derivative(m)
}

/// `d^m/dt^m P_n(t)`.
pub fn asymptotic_partial_sum(n: usize, m: usize, t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    if !t.is_positive() {
        return Err(Error::NonPositiveArgument(t.to_scientific(12)));
    }
    let t = t.with_precision(policy.internal_bits() + 16);
    let mut v = asymptotic_partial_sum_exact(n, m).eval(&t);
    v.round_to(policy.internal_bits());
    Ok(v)
}

/// Configured bounds on the remainder family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SpecLimits {
    pub max_n: usize,
    pub max_m: usize,
}

impl Default for SpecLimits {
    fn default() -> Self {
        Self { max_n: 8, max_m: 6 }
    }
}

/// Which function `phi` is being studied.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum RemainderSpec {
    /// `phi_{n,m} = (-1)^m R_n^{(m)}`.
    Remainder { n: usize, m: usize },
    /// `psi'(t) - 1/t - 1/(2t^2) - 1/(6t^3) + 1/(30t^5)`, identical to `phi_{2,2}`.
    Q,
    /// `ln t - 1/(2t) - psi(t)`, identical to `phi_{0,1}`.
    PsiGap,
    /// `1/t + 1/(2t^2) + 1/(6t^3) - psi'(t)`, identical to `phi_{1,2}`.
    TrigammaGap3,
}

impl RemainderSpec {
    pub fn remainder(n: usize, m: usize) -> Self {
        RemainderSpec::Remainder { n, m }
    }

    /// Parses `Q`, `PsiGap`, `TrigammaGap3` (case-insensitive).
    pub fn special(name: &str) -> Result<Self> {
        match name.to_ascii_lowercase().as_str() {
            "q" => Ok(RemainderSpec::Q),
            "psigap" => Ok(RemainderSpec::PsiGap),
            "trigammagap3" => Ok(RemainderSpec::TrigammaGap3),
            other => Err(Error::InvalidSpec(format!("unknown special function {other:?}"))),
        }
    }

    /// The `(n, m)` indices this function coincides with.
    pub fn indices(&self) -> (usize, usize) {
        match *self {
            RemainderSpec::Remainder { n, m } => (n, m),
            RemainderSpec::Q => (2, 2),
            RemainderSpec::PsiGap => (0, 1),
            RemainderSpec::TrigammaGap3 => (1, 2),
        }
    }

    pub fn validate(&self, limits: &SpecLimits) -> Result<()> {
        if let RemainderSpec::Remainder { n, m } = *self {
            if n > limits.max_n || m > limits.max_m {
                return Err(Error::InvalidSpec(format!(
                    "(n, m) = ({n}, {m}) exceeds the configured maxima ({}, {})",
                    limits.max_n, limits.max_m
                )));
            }
        }
        Ok(())
    }

    /// Order of the singularity at `0+`: `phi(t) ~ C t^-p`. `0` means a
    /// logarithmic singularity (only `R_0` itself).
    pub fn pole_order(&self) -> usize {
        match *self {
            RemainderSpec::Remainder { n: 0, m } => m,
            RemainderSpec::Remainder { n, m } => 2 * n - 1 + m,
            RemainderSpec::Q => 5,
            RemainderSpec::PsiGap => 1,
            RemainderSpec::TrigammaGap3 => 3,
        }
    }

    /// Decay exponent at infinity: `phi(t) ~ C t^-d`.
    pub fn decay_order(&self) -> usize {
        let (n, m) = self.indices();
        2 * n + 1 + m
    }

    /// `sign * (ln Gamma)^{(gamma_order)} + elementary` for this function.
    fn decomposition(&self) -> (i64, usize, Elementary) {
        match *self {
            RemainderSpec::Remainder { n, m } => {
                let sign = if (n + m) % 2 == 0 { 1 } else { -1 };
                let e = asymptotic_partial_sum_exact(n, m).scaled(&rat(-sign, 1));
                (sign, m, e)
            }
            RemainderSpec::Q => {
                let mut e = Elementary::default();
                e.add_power(-1, rat(-1, 1));
                e.add_power(-2, rat(-1, 2));
                e.add_power(-3, rat(-1, 6));
                e.add_power(-5, rat(1, 30));
                (1, 2, e)
            }
            RemainderSpec::PsiGap => {
                let mut e = Elementary {
                    log_t: Rational::one(),
                    ..Elementary::default()
                };
                e.add_power(-1, rat(-1, 2));
                (-1, 1, e)
            }
            RemainderSpec::TrigammaGap3 => {
                let mut e = Elementary::default();
                e.add_power(-1, rat(1, 1));
                e.add_power(-2, rat(1, 2));
                e.add_power(-3, rat(1, 6));
                (-1, 2, e)
            }
        }
    }

    /// Extra bits needed at `t` to absorb the cancellation between the gamma
    /// part and the elementary part for large `t`.
    pub fn cancellation_bits(&self, t: &Real) -> usize {
        let tf = t.to_f64();
        if tf <= 1.0 {
            return 8;
        }
        let (_, q0, _) = self.decomposition();
        let slope = self.decay_order() as f64 + 2.0 - q0 as f64;
        (slope.max(1.0) * tf.log2()).ceil() as usize + 8
    }
}

impl fmt::Display for RemainderSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            RemainderSpec::Remainder { n, m } => write!(f, "phi({n},{m})"),
            RemainderSpec::Q => f.write_str("Q"),
            RemainderSpec::PsiGap => f.write_str("PsiGap"),
            RemainderSpec::TrigammaGap3 => f.write_str("TrigammaGap3"),
        }
    }
}

/// `[(ln Gamma)^{(q)}(t) for q in lo..=hi]`.
fn log_gamma_derivatives(lo: usize, hi: usize, t: &Real, policy: &PrecisionPolicy) -> Result<Vec<Real>> {
    let mut out = Vec::with_capacity(hi - lo + 1);
    if lo == 0 {
        out.push(log_gamma(t, policy)?);
        if hi > 0 {
            out.extend(polygamma_range(0..=hi - 1, t, policy)?);
        }
    } else {
        out.extend(polygamma_range(lo - 1..=hi - 1, t, policy)?);
    }
    Ok(out)
}

/// `[phi(t), phi'(t), ..., phi^{(count)}(t)]` for the given function.
pub fn phi_derivatives(
    spec: &RemainderSpec,
    t: &Real,
    count: usize,
    policy: &PrecisionPolicy,
) -> Result<Vec<Real>> {
    if !t.is_positive() {
        return Err(Error::NonPositiveArgument(t.to_scientific(12)));
    }
    let (sign, q0, elementary) = spec.decomposition();
    let inner = policy.widened(spec.cancellation_bits(t));
    let p = inner.internal_bits();
    let t = t.with_precision(p);
    let gammas = log_gamma_derivatives(q0, q0 + count, &t, &inner)?;
    let out_bits = policy.internal_bits();
    let mut e = elementary;
    let mut out = Vec::with_capacity(count + 1);
    for g in gammas {
        let g = if sign < 0 { -g } else { g };
        let mut v = g + e.eval(&t);
        v.round_to(out_bits);
        out.push(v);
        e = e.derivative();
    }
    Ok(out)
}

/// `phi(t)` for the given function (`phi_{n,m}` or a named special).
pub fn remainder_value(spec: &RemainderSpec, t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    remainder_value_with_limits(spec, t, policy, &SpecLimits::default())
}

pub fn remainder_value_with_limits(
    spec: &RemainderSpec,
    t: &Real,
    policy: &PrecisionPolicy,
    limits: &SpecLimits,
) -> Result<Real> {
    spec.validate(limits)?;
    Ok(phi_derivatives(spec, t, 0, policy)?.remove(0))
}

/// `Q(t)` from the explicit formula.
pub fn q_value(t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    q_derivative(0, t, policy)
}

/// `Q^{(j)}(t)`.
pub fn q_derivative(j: usize, t: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    Ok(phi_derivatives(&RemainderSpec::Q, t, j, policy)?.remove(j))
}

/// `(-1)^n B_{2n+2} / ((2n+2)(2n+1))`, so that
/// `R_n(t) + R_{n+1}(t) = telescoping_coefficient(n) / t^{2n+1}`.
pub fn telescoping_coefficient(n: usize) -> Rational {
    let c = stirling_coefficient(n + 1);
    if n % 2 == 0 {
        c
    } else {
        -c
    }
}

/// Approximate `log2 |x|`, used to size precision margins.
pub fn log2_abs(x: &Rational) -> f64 {
    let n = x.numer().abs().to_f64().unwrap_or(f64::MAX);
    let d = x.denom().to_f64().unwrap_or(f64::MAX);
    n.log2() - d.log2()
}
