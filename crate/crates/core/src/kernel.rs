//! The Laplace kernel of `Q`.
//!
//! `h(s) = s/(1 - e^-s) - 1 - s/2 - s^2/12 + s^4/720` satisfies
//! `Q(t) = int_0^inf h(s) e^(-ts) ds`. Its Maclaurin series is
//! `sum_{k>=3} B_{2k} s^{2k} / (2k)!`, used below `SERIES_CROSSOVER` where the
//! closed forms lose too many bits to cancellation.

use num_bigint::BigInt;
use num_traits::{Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::bernoulli::{bernoulli, factorial, Rational};
use crate::error::{Error, Result};
use crate::real::{PrecisionPolicy, Real};

/// Below this point `h^{(j)}` is summed from its Maclaurin series.
pub const SERIES_CROSSOVER: f64 = 0.25;

/// Extra bits carried through the closed forms.
const CLOSED_FORM_GUARD: usize = 64;

/// Derivative order `j` with `0 <= j <= 4`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub struct KernelOrder(u8);

impl KernelOrder {
    pub const MAX: u8 = 4;

    pub fn new(j: u8) -> Result<Self> {
        if j > Self::MAX {
            return Err(Error::InvalidIndex(format!("kernel order {j} exceeds {}", Self::MAX)));
        }
        Ok(Self(j))
    }

    pub fn get(self) -> u8 {
        self.0
    }

    pub fn all() -> impl Iterator<Item = KernelOrder> {
        (0..=Self::MAX).map(KernelOrder)
    }
}

impl TryFrom<u8> for KernelOrder {
    type Error = Error;
    fn try_from(j: u8) -> Result<Self> {
        Self::new(j)
    }
}

impl From<KernelOrder> for u8 {
    fn from(j: KernelOrder) -> u8 {
        j.0
    }
}

/// `c_k`, the `k`-th Maclaurin coefficient of `30 (e^s - 1)^5 h^{(4)}(s)`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KernelCoefficient {
    pub k: u32,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub c_k: Rational,
}

fn pow_int(base: i64, k: u32) -> BigInt {
    num_traits::pow(BigInt::from(base), k as usize)
}

/// Numerator coefficient formula, valid for every `k >= 0`.
/// It vanishes for `k < 7`.
fn numerator_coefficient(k: u32) -> Rational {
    let ki = BigInt::from(k);
    let mut num = pow_int(5, k);
    num += (&ki * 110 - 350) * pow_int(3, k);
    // 5 (3k - 50) 2^(2k-1), written as 5 (3k - 50) 4^k / 2 to stay integral at k = 0
    let four = (&ki * 3 - 50) * 5 * pow_int(4, k);
    let mut num = num * 2 + four;
    num += ((&ki * 165 + 350) * pow_int(2, k)) * 2;
    num += (&ki * 30 + 125) * 2;
    if k == 0 {
        // the constant term of the bracket also carries the trailing -1
        num -= 2;
    }
    Rational::new(num, factorial(k as usize) * 2)
}

pub fn h4_series_coefficient(k: u32) -> Result<KernelCoefficient> {
    if k < 7 {
        return Err(Error::InvalidIndex(format!("series of h4 starts at k = 7, got {k}")));
    }
    let c_k = numerator_coefficient(k);
    if !c_k.is_positive() {
        return Err(Error::InvalidIndex(format!("coefficient c_{k} = {c_k} is not positive")));
    }
    Ok(KernelCoefficient { k, c_k })
}

/// Outcome of checking `c_k > 0` for `7 <= k <= k_max`. Exact, but only
/// evidence for the infinite series.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PositivityReport {
    pub k_max: u32,
    pub checked: u32,
    pub all_positive: bool,
    pub first_failure: Option<u32>,
}

pub fn h4_positivity_scan(k_max: u32) -> Result<PositivityReport> {
    if k_max < 7 {
        return Err(Error::InvalidIndex(format!("k_max must be at least 7, got {k_max}")));
    }
    let first_failure = (7..=k_max).find(|&k| !numerator_coefficient(k).is_positive());
    Ok(PositivityReport {
        k_max,
        checked: k_max - 6,
        all_positive: first_failure.is_none(),
        first_failure,
    })
}

fn series(j: u8, s: &Real) -> Real {
    let p = s.precision();
    let j = j as usize;
    let s2 = s * s;
    let mut sum = Real::zero(p);
    let mut k = 3usize;
    let mut pw = s.powi((2 * k - j) as i64);
    loop {
        let c = bernoulli(2 * k) / Rational::from(factorial(2 * k - j));
        let term = Real::from_rational(&c, p) * &pw;
        sum = sum + &term;
        let small = match (term.exponent(), sum.exponent()) {
            (Some(te), Some(se)) => te < se - p as i64 - 4,
            (None, _) => true,
            _ => false,
        };
        if small && k > 3 {
            return sum;
        }
        pw = pw * &s2;
        k += 1;
    }
}

fn closed_form(j: u8, s: &Real) -> Real {
    let p = s.precision();
    let c = |v: i64| Real::from_i64(v, p);
    let e = s.exp();
    let d = &e - c(1);
    let s2 = s * s;
    let s3 = &s2 * s;
    let e2 = &e * &e;
    let e3 = &e2 * &e;
    match j {
        0 => {
            s * &e / &d - c(1) - s.div_i64(2) - s2.div_i64(12) + (&s2 * &s2).div_i64(720)
        }
        1 => {
            let num = &s3 + (&s3 - s.mul_i64(30) + c(90)) * &e2 - s.mul_i64(2) * (&s2 + c(60)) * &e
                - s.mul_i64(30)
                - c(90);
            num / (d.powi(2).mul_i64(180))
        }
        2 => {
            let num = &e3 * (&s2 - c(10)) + (&s2 + s.mul_i64(20) + c(30)).mul_i64(3) * &e
                - (&s2 - s.mul_i64(20) + c(30)).mul_i64(3) * &e2
                - &s2
                + c(10);
            num / d.powi(3).mul_i64(60)
        }
        3 => {
            let e4 = &e2 * &e2;
            let num = s * &e4 + (c(90) - s.mul_i64(34)) * &e3 - s.mul_i64(114) * &e2
                - (s.mul_i64(17) + c(45)).mul_i64(2) * &e
                + s;
            num / d.powi(4).mul_i64(30)
        }
        _ => {
            let e4 = &e2 * &e2;
            let e5 = &e4 * &e;
            let num = &e5
                + (s.mul_i64(6) - c(25)).mul_i64(5) * &e4
                + (s.mul_i64(33) - c(35)).mul_i64(10) * &e3
                + (s.mul_i64(33) + c(35)).mul_i64(10) * &e2
                + (s.mul_i64(6) + c(25)).mul_i64(5) * &e
                - c(1);
            num / d.powi(5).mul_i64(30)
        }
    }
}

/// `h^{(j)}(s)`.
pub fn kernel_h(j: KernelOrder, s: &Real, policy: &PrecisionPolicy) -> Result<Real> {
    if !s.is_positive() {
        return Err(Error::NonPositiveArgument(s.to_scientific(12)));
    }
    let bits = policy.internal_bits();
    let mut v = if s.to_f64() < SERIES_CROSSOVER {
        series(j.get(), &s.with_precision(bits + 16))
    } else {
        closed_form(j.get(), &s.with_precision(bits + CLOSED_FORM_GUARD))
    };
    v.round_to(bits);
    Ok(v)
}

/// `h^{(4)}` from the truncated coefficient series `sum_{k=7}^{k_max} c_k s^k / (30 (e^s - 1)^5)`.
pub fn h4_from_coefficients(s: &Real, k_max: u32) -> Real {
    let p = s.precision();
    let mut acc = Real::zero(p);
    for k in (7..=k_max).rev() {
        acc = (acc + Real::from_rational(&numerator_coefficient(k), p)) * s;
    }
    let acc = acc * s.powi(6);
    let d = s.exp() - Real::one(p);
    acc / d.powi(5).mul_i64(30)
}

/// Quadrature controls for [`laplace_reconstruct`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuadParams {
    /// Absolute error target.
    pub tolerance: f64,
    /// Refinement levels of the tanh-sinh rule before giving up.
    pub max_levels: u32,
    /// Width of the panels that split `[0, cutoff]`.
    pub panel_width: f64,
}

impl Default for QuadParams {
    fn default() -> Self {
        Self {
            tolerance: 1e-24,
            max_levels: 9,
            panel_width: 1.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LaplaceEstimate {
    pub value: Real,
    /// Last refinement difference plus the truncated tail bound.
    pub error_estimate: f64,
    pub cutoff: f64,
    pub tail_bound: f64,
    pub levels: u32,
    pub evaluations: usize,
}

/// `int_S^inf (s^4/720) e^(-ts) ds`, which bounds the neglected tail since `0 <= h(s) <= s^4/720`.
pub fn tail_bound(t: f64, cutoff: f64) -> f64 {
    let mut sum = 0.0;
    let mut falling = 1.0;
    for i in 0..=4 {
        sum += falling * cutoff.powi(4 - i) / t.powi(i + 1);
        falling *= (4 - i) as f64;
    }
    (-t * cutoff).exp() * sum / 720.0
}

struct Node {
    /// `1 - x` for the abscissa `x` in `(-1, 1)`, computed without cancellation.
    one_minus: Real,
    weight: Real,
}

/// Tanh-sinh nodes `k * step` for the given `k`, mirrored pairs implied.
fn tanh_sinh_nodes(ks: impl Iterator<Item = i64>, step: &Real) -> Vec<Node> {
    let p = step.precision();
    let half_pi = Real::pi(p).div_i64(2);
    ks.map(|k| {
        let x = step.mul_i64(k);
        let ex = x.exp();
        let sinh = (&ex - ex.recip()).div_i64(2);
        let cosh = (&ex + ex.recip()).div_i64(2);
        let u = &half_pi * sinh;
        let e2u = u.mul_i64(2).exp();
        let one_minus = Real::from_i64(2, p) / (Real::one(p) + &e2u);
        // 1 / cosh(u)^2 = 4 e^{2u} / (1 + e^{2u})^2
        let sech2 = e2u.mul_i64(4) / (Real::one(p) + &e2u).powi(2);
        Node {
            one_minus,
            weight: &half_pi * cosh * sech2,
        }
    })
    .collect()
}

/// Numerical `int_0^inf h(s) e^(-ts) ds`, which should reproduce `Q(t)`.
pub fn laplace_reconstruct(t: &Real, quad: &QuadParams, policy: &PrecisionPolicy) -> Result<LaplaceEstimate> {
    if !t.is_positive() {
        return Err(Error::NonPositiveArgument(t.to_scientific(12)));
    }
    if !(quad.tolerance > 0.0) || !(quad.panel_width > 0.0) {
        return Err(Error::QuadratureNotConverged("tolerance and panel width must be positive".into()));
    }
    let tf = t.to_f64();
    let mut cutoff = (40.0 / tf).max(1.0);
    while tail_bound(tf, cutoff) > quad.tolerance / 4.0 {
        cutoff *= 1.25;
    }
    let p = policy.internal_bits() + 16;
    let t = t.with_precision(p);
    let panels = (cutoff / quad.panel_width).ceil().max(1.0) as usize;
    let width = Real::from_f64(cutoff, p).div_i64(panels as i64);
    let half = width.div_i64(2);
    let inner = policy.widened(16);

    let eps_exponent = -(p as i64) - 8;
    // Truncate the node sequence once 1 - x falls below 2^-p relative to the panel.
    let integrand = |s: &Real| -> Result<Real> {
        Ok(kernel_h(KernelOrder(0), s, &inner)? * (-(s * &t)).exp())
    };
    let evaluations = std::cell::Cell::new(0usize);
    let panel_sum = |nodes: &[Node], with_center: bool| -> Result<Real> {
        let mut acc = Real::zero(p);
        for i in 0..panels {
            let a = width.mul_i64(i as i64);
            let b = &a + &width;
            let mid = &a + &half;
            if with_center {
                acc = acc + integrand(&mid)? * Real::pi(p).div_i64(2);
                evaluations.set(evaluations.get() + 1);
            }
            for node in nodes {
                let off = &half * &node.one_minus;
                let left = &a + &off;
                let right = &b - &off;
                let mut f = Real::zero(p);
                if left.is_positive() {
                    f = f + integrand(&left)?;
                    evaluations.set(evaluations.get() + 1);
                }
                f = f + integrand(&right)?;
                evaluations.set(evaluations.get() + 1);
                acc = acc + f * &node.weight;
            }
        }
        Ok(acc * &half)
    };

    let node_limit = |step: &Real, k: i64| -> bool {
        // stop once the weight is negligible
        tanh_sinh_nodes(std::iter::once(k), step)
            .first()
            .and_then(|n| n.weight.exponent())
            .map_or(true, |e| e < eps_exponent)
    };

    let mut step = Real::one(p);
    let max_k = |step: &Real| -> i64 {
        let mut k = 1;
        while !node_limit(step, k) {
            k += 1;
        }
        k
    };
    let k0 = max_k(&step);
    let base_nodes = tanh_sinh_nodes(1..k0, &step);
    let mut raw = panel_sum(&base_nodes, true)?;
    let mut estimate = &raw * &step;
    for level in 1..=quad.max_levels {
        step = step.div_i64(2);
        let kmax = max_k(&step);
        let new_nodes = tanh_sinh_nodes((1..kmax).filter(|k| k % 2 == 1), &step);
        raw = raw + panel_sum(&new_nodes, false)?;
        let next = &raw * &step;
        let diff = (&next - &estimate).abs().to_f64();
        estimate = next;
        if level >= 3 && diff < quad.tolerance / 2.0 {
            let tail = tail_bound(tf, cutoff);
            return Ok(LaplaceEstimate {
                value: estimate.with_precision(policy.internal_bits()),
                error_estimate: diff + tail,
                cutoff,
                tail_bound: tail,
                levels: level,
                evaluations: evaluations.get(),
            });
        }
    }
    Err(Error::QuadratureNotConverged(format!(
        "no agreement to {:e} after {} levels",
        quad.tolerance, quad.max_levels
    )))
}

/// Whether every `c_k` for `k < 7` vanishes.
pub fn low_coefficients_vanish() -> bool {
    (0..7).all(|k| numerator_coefficient(k).is_zero())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::remainders::q_value;

    fn pol() -> PrecisionPolicy {
        PrecisionPolicy::new(128).unwrap()
    }

    fn real(s: &str) -> Real {
        Real::parse_decimal(s, 256).unwrap()
    }

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n.into(), d.into())
    }

    fn order(j: u8) -> KernelOrder {
        KernelOrder::new(j).unwrap()
    }

    #[test]
    fn coefficients_match_displayed_values() {
        let expect = [(7, r(5, 7)), (8, r(25, 14)), (9, r(193, 84)), (10, r(85, 42)), (11, r(5065, 3696))];
        for (k, twice) in expect {
            let c = h4_series_coefficient(k).unwrap();
            assert_eq!(c.c_k * Rational::from(BigInt::from(2)), twice, "k={k}");
        }
        assert!(matches!(h4_series_coefficient(6), Err(Error::InvalidIndex(_))));
    }

    /// Oracle: expand each exponential of the closed-form numerator in its own
    /// power series and collect `s^k` directly.
    #[test]
    fn coefficients_match_numerator_expansion() {
        // numerator = sum_i (a_i + b_i s) e^{i s}
        let parts: [(i64, i64, i64); 6] = [(5, 1, 0), (4, -125, 30), (3, -350, 330), (2, 350, 330), (1, 125, 30), (0, -1, 0)];
        for k in 0..30u32 {
            let mut acc = Rational::zero();
            for &(i, a, b) in &parts {
                let fk = Rational::from(factorial(k as usize));
                acc += Rational::from(BigInt::from(a) * pow_int(i, k)) / &fk;
                if k >= 1 {
                    let fk1 = Rational::from(factorial(k as usize - 1));
                    acc += Rational::from(BigInt::from(b) * pow_int(i, k - 1)) / fk1;
                }
            }
            assert_eq!(acc, numerator_coefficient(k), "k={k}");
        }
        assert!(low_coefficients_vanish());
    }

    #[test]
    fn positivity_scan() {
        assert!(h4_positivity_scan(7).unwrap().all_positive);
        let rep = h4_positivity_scan(200).unwrap();
        assert!(rep.all_positive);
        assert_eq!(rep.checked, 194);
        assert!(h4_positivity_scan(6).is_err());
    }

    #[test]
    fn small_s_limit() {
        let s = real("1e-3");
        let h = kernel_h(order(0), &s, &pol()).unwrap();
        let ratio = (h / s.powi(6)).to_f64();
        assert!((ratio - 1.0 / 30240.0).abs() < 1e-7);
    }

    #[test]
    fn value_at_one() {
        // Oracle: direct evaluation of the defining formula at 300 bits.
        let p = 300;
        let one = Real::one(p);
        let e = one.exp();
        // 1 + 1/2 + 1/12 - 1/720 = 1139/720
        let direct = &e / (&e - &one) - Real::from_rational(&r(1139, 720), p);
        let h = kernel_h(order(0), &Real::one(256), &pol()).unwrap();
        assert!((&h - &direct).abs() < real("1e-38"));
        assert!(h.to_scientific(3).starts_with("3.226e-5") || h.to_scientific(3).starts_with("3.23e-5"), "{h}");
    }

    #[test]
    fn closed_forms_agree_with_series_at_crossover() {
        let p = PrecisionPolicy::new(160).unwrap();
        for s in ["0.25", "0.4", "0.8", "1.5"] {
            let s = real(s);
            for j in 0..=4u8 {
                let a = series(j, &s.with_precision(400));
                let b = closed_form(j, &s.with_precision(400));
                let rel = ((&a - &b).abs() / a.abs()).to_f64();
                assert!(rel < 1e-60, "j={j} s={s}: {a} vs {b}");
                let v = kernel_h(order(j), &s, &p).unwrap();
                assert!(((&v - &a).abs() / a.abs()).to_f64() < 1e-45);
            }
        }
    }

    #[test]
    fn boundary_limits() {
        let s = real("1e-4");
        for j in 0..=3u8 {
            let v = kernel_h(order(j), &s, &pol()).unwrap();
            assert!(v.abs().to_f64() < 1e-8, "j={j}: {v}");
        }
    }

    #[test]
    fn positive_on_log_grid() {
        let p = pol();
        for i in 0..=60 {
            let s = 1e-2 * (5000f64).powf(i as f64 / 60.0);
            let s = Real::from_f64(s, 256);
            for j in KernelOrder::all() {
                assert!(kernel_h(j, &s, &p).unwrap().is_positive(), "j={j:?} s={s}");
            }
        }
    }

    #[test]
    fn derivative_chain() {
        let p = PrecisionPolicy::new(128).unwrap();
        let h = real("1e-10");
        for s in ["0.1", "0.3", "2", "17"] {
            let s = real(s);
            for j in 0..=3u8 {
                let fp = kernel_h(order(j), &(&s + &h), &p).unwrap();
                let fm = kernel_h(order(j), &(&s - &h), &p).unwrap();
                let fd = (fp - fm) / h.mul_i64(2);
                let exact = kernel_h(order(j + 1), &s, &p).unwrap();
                let rel = ((&fd - &exact).abs() / exact.abs()).to_f64();
                assert!(rel < 2f64.powi(-32), "j={j} s={s} rel={rel}");
            }
        }
    }

    #[test]
    fn series_consistency_with_tail_bound() {
        let k_max = 60u32;
        for s in ["0.5", "1", "2.5", "5"] {
            let s = real(s).with_precision(300);
            let closed = closed_form(4, &s);
            let partial = h4_from_coefficients(&s, k_max);
            // |c_k| <= (320k + 1076) 5^k / k!; the terms beyond k_max shrink by at least half each step.
            let x = 5.0 * s.to_f64();
            let k = (k_max + 1) as f64;
            let first = (320.0 * k + 1076.0) * (k * x.ln() - libm_lgamma(k + 1.0)).exp();
            let bound = 2.0 * first / (30.0 * (s.to_f64().exp() - 1.0).powi(5));
            assert!((closed - partial).abs().to_f64() <= bound, "s={s}");
        }
    }

    fn libm_lgamma(x: f64) -> f64 {
        // Stirling is plenty for the bound at x > 60.
        (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln() + 1.0 / (12.0 * x)
    }

    #[test]
    fn order_validation() {
        assert!(KernelOrder::new(5).is_err());
        assert_eq!(KernelOrder::all().count(), 5);
        assert!(kernel_h(order(0), &real("0"), &pol()).is_err());
    }

    #[test]
    fn tail_bound_dominates_direct_tail() {
        // the bound integrates s^4/720, which dominates h
        let s = real("30");
        let h = kernel_h(order(0), &s, &pol()).unwrap().to_f64();
        assert!(h <= 30f64.powi(4) / 720.0);
        assert!(tail_bound(1.0, 70.0) < 1e-23);
    }

    #[test]
    fn laplace_matches_q() {
        let p = pol();
        let quad = QuadParams::default();
        for s in ["1", "5", "10"] {
            let t = real(s);
            let est = laplace_reconstruct(&t, &quad, &p).unwrap();
            let q = q_value(&t, &p).unwrap();
            let err = (&est.value - &q).abs().to_f64();
            assert!(err < 1e-20, "t={s}: err={err:e}");
        }
        let a = laplace_reconstruct(&real("10"), &quad, &p).unwrap().value;
        let b = laplace_reconstruct(&real("100"), &quad, &p).unwrap().value;
        assert!(b < a);
    }
}
