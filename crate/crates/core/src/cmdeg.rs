//! Completely monotonic degree evidence.
//!
//! A function `phi` has degree at least `r` when `t^r phi(t)` is completely
//! monotonic. Everything here is finite: a finite grid, finitely many
//! derivative orders, finite precision. Reports are numerical evidence and
//! say so.

use std::sync::OnceLock;

use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bernoulli::{binomial, Rational};
use crate::error::{Error, Result};
use crate::real::{PrecisionPolicy, Real};
use crate::remainders::{phi_derivatives, RemainderSpec, SpecLimits};

pub const EVIDENCE_NOTE: &str = "numerical evidence from a finite grid and finitely many derivatives; not a proof";

/// A source of `phi, phi', phi'', ...` at a point.
pub trait PhiSource: Sync {
    fn spec(&self) -> RemainderSpec;
    fn derivatives(&self, t: &Real, count: usize, policy: &PrecisionPolicy) -> Result<Vec<Real>>;
}

impl PhiSource for RemainderSpec {
    fn spec(&self) -> RemainderSpec {
        *self
    }

    fn derivatives(&self, t: &Real, count: usize, policy: &PrecisionPolicy) -> Result<Vec<Real>> {
        phi_derivatives(self, t, count, policy)
    }
}

/// `factor * phi` for a positive constant `factor`.
pub struct Scaled<S> {
    pub inner: S,
    pub factor: Real,
}

impl<S: PhiSource> PhiSource for Scaled<S> {
    fn spec(&self) -> RemainderSpec {
        self.inner.spec()
    }

    fn derivatives(&self, t: &Real, count: usize, policy: &PrecisionPolicy) -> Result<Vec<Real>> {
        Ok(self
            .inner
            .derivatives(t, count, policy)?
            .into_iter()
            .map(|d| d * &self.factor)
            .collect())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Spacing {
    Log,
}

/// Log-spaced sample points `t_min = t_0 < ... < t_{points-1} = t_max`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    pub t_min: Real,
    pub t_max: Real,
    pub points: usize,
    pub spacing: Spacing,
}

impl Grid {
    pub fn log(t_min: Real, t_max: Real, points: usize) -> Result<Self> {
        if !t_min.is_positive() {
            return Err(Error::InvalidGrid(format!("t_min must be positive, got {t_min}")));
        }
        if t_max <= t_min {
            return Err(Error::InvalidGrid(format!("t_max {t_max} must exceed t_min {t_min}")));
        }
        if points < 2 {
            return Err(Error::InvalidGrid(format!("need at least 2 points, got {points}")));
        }
        Ok(Self {
            t_min,
            t_max,
            points,
            spacing: Spacing::Log,
        })
    }

    /// Parses `log:<min>:<max>:<points>`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            ["log", lo, hi, n] => {
                let lo = Real::parse_decimal(lo, 256).map_err(|e| Error::InvalidGrid(e.to_string()))?;
                let hi = Real::parse_decimal(hi, 256).map_err(|e| Error::InvalidGrid(e.to_string()))?;
                let n = n
                    .parse()
                    .map_err(|_| Error::InvalidGrid(format!("bad point count {n:?}")))?;
                Self::log(lo, hi, n)
            }
            _ => Err(Error::InvalidGrid(format!("expected log:<min>:<max>:<points>, got {s:?}"))),
        }
    }

    pub fn points_at(&self, prec: usize) -> Vec<Real> {
        let lo = self.t_min.with_precision(prec);
        let hi = self.t_max.with_precision(prec);
        let (a, b) = (lo.ln(), hi.ln());
        let last = (self.points - 1) as i64;
        (0..self.points)
            .map(|i| match i as i64 {
                0 => lo.clone(),
                i if i == last => hi.clone(),
                i => (&a + (&b - &a).mul_i64(i).div_i64(last)).exp(),
            })
            .collect()
    }
}

impl Default for Grid {
    fn default() -> Self {
        Self::log(Real::parse_decimal("1e-3", 256).unwrap(), Real::from_i64(10_000, 256), 200).unwrap()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Pass,
    Violation,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Sample {
    pub t: Real,
    pub k: usize,
    pub value: Real,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridPoint {
    pub t: Real,
    pub k: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CmCheckReport {
    pub spec: RemainderSpec,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub r: Rational,
    pub max_order: usize,
    pub grid: Grid,
    pub precision: PrecisionPolicy,
    pub verdict: Verdict,
    pub violations: Vec<Sample>,
    pub inconclusive_points: Vec<GridPoint>,
    /// Every evaluated `(t, k, value)` in `(t, k)` order; empty when stripped.
    #[serde(default)]
    pub samples: Vec<Sample>,
    pub note: String,
}

impl CmCheckReport {
    pub fn is_consistent(&self) -> bool {
        match self.verdict {
            Verdict::Violation => !self.violations.is_empty(),
            Verdict::Inconclusive => self.violations.is_empty() && !self.inconclusive_points.is_empty(),
            Verdict::Pass => self.violations.is_empty() && self.inconclusive_points.is_empty(),
        }
    }

    pub fn without_samples(mut self) -> Self {
        self.samples.clear();
        self
    }
}

fn rational_to_real(r: &Rational, prec: usize) -> Real {
    Real::from_rational(r, prec)
}

/// Falling factorial `r (r-1) ... (r-j+1)`, exact.
pub fn falling_factorial(r: &Rational, j: usize) -> Rational {
    (0..j).fold(Rational::one(), |acc, i| acc * (r - Rational::from(BigInt::from(i))))
}

/// `(-1)^k d^k/dt^k [t^r phi(t)]` for `k = 0..=phis.len()-1`, with the largest
/// product-rule term magnitude for each `k`.
fn product_rule(r: &Rational, t: &Real, phis: &[Real]) -> Vec<(Real, Real)> {
    let p = phis.iter().map(Real::precision).max().unwrap_or(t.precision());
    let t = t.with_precision(p);
    let k_max = phis.len() - 1;
    let t_pow_r = if r.is_zero() {
        Real::one(p)
    } else {
        (rational_to_real(r, p) * t.ln()).exp()
    };
    let inv_t = t.recip();
    // a_j = r^(j falling) t^(r - j)
    let mut a = Vec::with_capacity(k_max + 1);
    let mut pw = t_pow_r;
    for j in 0..=k_max {
        a.push(rational_to_real(&falling_factorial(r, j), p) * &pw);
        pw = pw * &inv_t;
    }
    (0..=k_max)
        .map(|k| {
            let mut sum = Real::zero(p);
            let mut scale = Real::zero(p);
            for j in 0..=k {
                if a[j].is_zero() {
                    continue;
                }
                let c = Real::from_bigint(&binomial(k, j), p);
                let term = c * &a[j] * &phis[k - j];
                scale = scale.max(term.abs());
                sum = sum + term;
            }
            if k % 2 == 1 {
                sum = -sum;
            }
            (sum, scale)
        })
        .collect()
}

/// `(-1)^k d^k/dt^k [t^r phi(t)]`.
pub fn signed_derivative(
    spec: &RemainderSpec,
    r: &Rational,
    k: usize,
    t: &Real,
    policy: &PrecisionPolicy,
) -> Result<Real> {
    if r < &Rational::zero() {
        return Err(Error::InvalidSpec(format!("r must be nonnegative, got {r}")));
    }
    let phis = spec.derivatives(t, k, policy)?;
    Ok(product_rule(r, t, &phis).swap_remove(k).0)
}

/// Derivatives of `phi` sampled once on a grid and reused across exponents.
pub struct SampledGrid<'a, S: PhiSource> {
    source: &'a S,
    grid: Grid,
    max_order: usize,
    policy: PrecisionPolicy,
    ts: Vec<Real>,
    coarse: Vec<Result<Vec<Real>>>,
    fine: Vec<OnceLock<Result<Vec<Real>>>>,
}

impl<'a, S: PhiSource> SampledGrid<'a, S> {
    pub fn new(source: &'a S, max_order: usize, grid: &Grid, policy: &PrecisionPolicy) -> Result<Self> {
        if max_order < 1 {
            return Err(Error::InvalidIndex("max order K must be at least 1".into()));
        }
        let ts = grid.points_at(policy.internal_bits() + 16);
        let coarse = ts
            .par_iter()
            .map(|t| source.derivatives(t, max_order, policy))
            .collect();
        let fine = (0..ts.len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            source,
            grid: grid.clone(),
            max_order,
            policy: *policy,
            ts,
            coarse,
            fine,
        })
    }

    fn fine_derivatives(&self, i: usize) -> &Result<Vec<Real>> {
        self.fine[i].get_or_init(|| self.source.derivatives(&self.ts[i], self.max_order, &self.policy.doubled()))
    }

    pub fn check(&self, r: &Rational) -> CmCheckReport {
        let coarse_floor = Real::from_i64(2, 64).powi(-(self.policy.working_bits as i64) / 2);
        let fine_floor = Real::from_i64(2, 64).powi(-(self.policy.working_bits as i64));
        let rows: Vec<Vec<(Sample, Verdict)>> = (0..self.ts.len())
            .into_par_iter()
            .map(|i| {
                let t = &self.ts[i];
                let coarse = match &self.coarse[i] {
                    Ok(phis) => product_rule(r, t, phis),
                    Err(_) => Vec::new(),
                };
                let mut fine: Option<Vec<(Real, Real)>> = None;
                (0..=self.max_order)
                    .map(|k| {
                        let classify = |v: &Real, scale: &Real, floor: &Real| {
                            let guard = scale * floor;
                            if v >= &guard && v.is_positive() {
                                Some(Verdict::Pass)
                            } else if -v >= guard && v.is_negative() {
                                Some(Verdict::Violation)
                            } else {
                                None
                            }
                        };
                        let first = coarse.get(k).and_then(|(v, s)| classify(v, s, &coarse_floor).map(|c| (v.clone(), c)));
                        let (value, verdict) = match first {
                            Some(found) => found,
                            None => {
                                let f = fine.get_or_insert_with(|| match self.fine_derivatives(i) {
                                    Ok(phis) => product_rule(r, t, phis),
                                    Err(_) => Vec::new(),
                                });
                                match f.get(k) {
                                    Some((v, s)) => match classify(v, s, &fine_floor) {
                                        Some(c) => (v.clone(), c),
                                        None => (v.clone(), Verdict::Inconclusive),
                                    },
                                    None => (Real::zero(64), Verdict::Inconclusive),
                                }
                            }
                        };
                        let mut value = value;
                        value.round_to(self.policy.internal_bits());
                        let mut t = t.clone();
                        t.round_to(self.policy.internal_bits());
                        (Sample { t, k, value }, verdict)
                    })
                    .collect()
            })
            .collect();

        let mut violations = Vec::new();
        let mut inconclusive_points = Vec::new();
        let mut samples = Vec::with_capacity(self.ts.len() * (self.max_order + 1));
        for (sample, verdict) in rows.into_iter().flatten() {
            match verdict {
                Verdict::Violation => violations.push(sample.clone()),
                Verdict::Inconclusive => inconclusive_points.push(GridPoint {
                    t: sample.t.clone(),
                    k: sample.k,
                }),
                Verdict::Pass => {}
            }
            samples.push(sample);
        }
        let verdict = if !violations.is_empty() {
            Verdict::Violation
        } else if !inconclusive_points.is_empty() {
            Verdict::Inconclusive
        } else {
            Verdict::Pass
        };
        CmCheckReport {
            spec: self.source.spec(),
            r: r.clone(),
            max_order: self.max_order,
            grid: self.grid.clone(),
            precision: self.policy,
            verdict,
            violations,
            inconclusive_points,
            samples,
            note: EVIDENCE_NOTE.into(),
        }
    }
}

/// Signs of `(-1)^k [t^r phi]^{(k)}` for `k <= max_order` over the grid.
pub fn cm_check(
    spec: &RemainderSpec,
    r: &Rational,
    max_order: usize,
    grid: &Grid,
    policy: &PrecisionPolicy,
) -> Result<CmCheckReport> {
    cm_check_source(spec, r, max_order, grid, policy)
}

pub fn cm_check_source<S: PhiSource>(
    source: &S,
    r: &Rational,
    max_order: usize,
    grid: &Grid,
    policy: &PrecisionPolicy,
) -> Result<CmCheckReport> {
    if r < &Rational::zero() {
        return Err(Error::InvalidSpec(format!("r must be nonnegative, got {r}")));
    }
    Ok(SampledGrid::new(source, max_order, grid, policy)?.check(r))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Extrapolation {
    /// Polynomial in `t`, for poles `t^-p` with an analytic cofactor.
    PolynomialInT,
    /// Polynomial in `-1/ln t`, for logarithmic singularities.
    PolynomialInInverseLog,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SmallTBound {
    pub base_r: f64,
    /// Extrapolated `lim_{t->0+} -base_r - t phi'(t)/phi(t)`.
    pub limit: f64,
    /// `base_r + limit`, an upper bound on the degree.
    pub upper_bound: f64,
    pub method: Extrapolation,
    /// Difference between the last two extrapolants.
    pub spread: f64,
    pub t_sequence: Vec<f64>,
    pub samples: Vec<f64>,
}

/// Polynomial through `(xs, ys)` evaluated at `x = 0` (Neville).
fn extrapolate_to_zero(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len();
    let mut p = ys.to_vec();
    for level in 1..n {
        for i in (level..n).rev() {
            let (xa, xb) = (xs[i - level], xs[i]);
            p[i] = (xb * p[i - 1] - xa * p[i]) / (xb - xa);
        }
    }
    p[n - 1]
}

/// Extrapolants from the windows ending at the last and the second-to-last point.
fn windowed_limit(xs: &[f64], ys: &[f64]) -> (f64, f64) {
    const WINDOW: usize = 6;
    let fit = |end: usize| {
        let start = end.saturating_sub(WINDOW);
        extrapolate_to_zero(&xs[start..end], &ys[start..end])
    };
    (fit(xs.len()), fit(xs.len() - 1))
}

/// Limits with spread above this are reported as unstable.
pub const EXTRAPOLATION_TOLERANCE: f64 = 0.025;

/// Small-argument criterion: if `t^r phi` is completely monotonic then
/// `r + t phi'/phi <= 0` near `0+`, so the extrapolated limit of
/// `-base_r - t phi'/phi` bounds the degree by `base_r + limit`.
pub fn small_t_bound(
    spec: &RemainderSpec,
    t_sequence: &[Real],
    base_r: &Rational,
    policy: &PrecisionPolicy,
) -> Result<SmallTBound> {
    small_t_bound_source(spec, t_sequence, base_r, policy)
}

pub fn small_t_bound_source<S: PhiSource>(
    source: &S,
    t_sequence: &[Real],
    base_r: &Rational,
    policy: &PrecisionPolicy,
) -> Result<SmallTBound> {
    if t_sequence.len() < 2 {
        return Err(Error::ExtrapolationUnstable("need at least two points".into()));
    }
    if t_sequence.windows(2).any(|w| w[1] >= w[0]) || !t_sequence.last().unwrap().is_positive() {
        return Err(Error::ExtrapolationUnstable("t sequence must decrease strictly toward 0+".into()));
    }
    let base = rational_to_real(base_r, policy.internal_bits());
    let samples: Vec<f64> = t_sequence
        .par_iter()
        .map(|t| {
            let d = source.derivatives(t, 1, policy)?;
            Ok((-(&base) - t * &d[1] / &d[0]).to_f64())
        })
        .collect::<Result<_>>()?;
    let ts: Vec<f64> = t_sequence.iter().map(Real::to_f64).collect();
    let (lt, pt) = windowed_limit(&ts, &samples);
    let spread_t = (lt - pt).abs();
    let us: Vec<f64> = ts.iter().map(|t| -1.0 / t.ln()).collect();
    let (lu, pu) = windowed_limit(&us, &samples);
    let spread_u = (lu - pu).abs();

    let (limit, spread, method) = if spread_t <= 1e-3 || spread_t <= spread_u {
        (lt, spread_t, Extrapolation::PolynomialInT)
    } else {
        (lu, spread_u, Extrapolation::PolynomialInInverseLog)
    };
    if !(spread <= EXTRAPOLATION_TOLERANCE) || !limit.is_finite() {
        return Err(Error::ExtrapolationUnstable(format!(
            "successive estimates disagree by {spread:e} (t-polynomial {lt}, inverse-log {lu})"
        )));
    }
    let base_f = base_r.to_f64().unwrap_or(0.0);
    Ok(SmallTBound {
        base_r: base_f,
        limit,
        upper_bound: base_f + limit,
        method,
        spread,
        t_sequence: ts,
        samples,
    })
}

/// `10^-1, 10^-2, ..., 10^-decades`.
pub fn decade_sequence(decades: u32, prec: usize) -> Vec<Real> {
    (1..=decades as i64)
        .map(|d| Real::from_i64(10, prec).powi(-d))
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum UpperMethod {
    SmallTCriterion,
    ScanViolation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DegreeBracket {
    pub spec: RemainderSpec,
    pub lower: f64,
    pub upper: f64,
    #[serde(with = "crate::bernoulli::rational_string")]
    pub lattice_step: Rational,
    pub upper_method: UpperMethod,
    pub small_t: SmallTBound,
    pub lower_evidence: CmCheckReport,
    pub upper_evidence: Option<CmCheckReport>,
    /// Lattice points whose scan was inconclusive; excluded from both ends.
    pub inconclusive_lattice: Vec<f64>,
    pub note: String,
}

impl DegreeBracket {
    pub fn contains(&self, value: f64, tolerance: f64) -> bool {
        self.lower - tolerance <= value && value <= self.upper + tolerance
    }
}

/// Snap tolerance for the small-t limit onto the exponent lattice.
pub const SNAP_TOLERANCE: f64 = 1e-2;

/// Search settings shared by brackets and conjecture scans.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BracketConfig {
    #[serde(with = "crate::bernoulli::rational_string")]
    pub lattice_step: Rational,
    pub max_order: usize,
    pub grid: Grid,
    /// Decades of the extrapolation sequence, then of the inverse-log fallback.
    pub small_t_decades: u32,
    pub fallback_decades: u32,
}

impl Default for BracketConfig {
    fn default() -> Self {
        Self {
            lattice_step: Rational::new(1.into(), 20.into()),
            max_order: 12,
            grid: Grid::default(),
            small_t_decades: 4,
            fallback_decades: 12,
        }
    }
}

/// Numerical bracket `[lower, upper]` for the degree of `phi`.
pub fn degree_bracket(
    spec: &RemainderSpec,
    config: &BracketConfig,
    policy: &PrecisionPolicy,
) -> Result<DegreeBracket> {
    degree_bracket_source(spec, config, policy)
}

pub fn degree_bracket_source<S: PhiSource>(
    source: &S,
    config: &BracketConfig,
    policy: &PrecisionPolicy,
) -> Result<DegreeBracket> {
    let step = &config.lattice_step;
    if step <= &Rational::zero() || step > &Rational::one() {
        return Err(Error::InvalidGrid(format!("lattice step must lie in (0, 1], got {step}")));
    }
    let prec = policy.internal_bits() + 16;
    let zero = Rational::zero();
    let small_t = match small_t_bound_source(source, &decade_sequence(config.small_t_decades, prec), &zero, policy) {
        Ok(b) => b,
        Err(Error::ExtrapolationUnstable(_)) => {
            small_t_bound_source(source, &decade_sequence(config.fallback_decades, prec), &zero, policy)?
        }
        Err(e) => return Err(e),
    };
    let step_f = step.to_f64().unwrap_or(0.05);
    let nearest = (small_t.upper_bound / step_f).round();
    let snapped = (small_t.upper_bound - nearest * step_f).abs() < SNAP_TOLERANCE;
    let top = if snapped {
        nearest.max(0.0) as i64
    } else {
        (small_t.upper_bound / step_f).floor().max(0.0) as i64
    };
    let upper_small = if snapped { nearest * step_f } else { small_t.upper_bound };

    let sampled = SampledGrid::new(source, config.max_order, &config.grid, policy)?;
    let lattice = |i: i64| step * Rational::from(BigInt::from(i));
    let mut cache: std::collections::BTreeMap<i64, CmCheckReport> = Default::default();
    let verdict_at = |i: i64, cache: &mut std::collections::BTreeMap<i64, CmCheckReport>| {
        cache
            .entry(i)
            .or_insert_with(|| sampled.check(&lattice(i)))
            .verdict
    };

    if verdict_at(0, &mut cache) != Verdict::Pass {
        return Err(Error::NoPassingLattice(format!(
            "{} fails the scan already at r = 0",
            source.spec()
        )));
    }
    // Largest passing index, assuming passes form a prefix of the lattice.
    let mut lo = 0i64;
    if verdict_at(top, &mut cache) == Verdict::Pass {
        lo = top;
    } else {
        let mut hi = top;
        while hi - lo > 1 {
            let mid = (lo + hi) / 2;
            if verdict_at(mid, &mut cache) == Verdict::Pass {
                lo = mid;
            } else {
                hi = mid;
            }
        }
    }
    let mut inconclusive_lattice = Vec::new();
    let mut violation_at = None;
    for i in lo + 1..=top {
        match verdict_at(i, &mut cache) {
            Verdict::Violation => {
                violation_at = Some(i);
                break;
            }
            Verdict::Inconclusive => inconclusive_lattice.push(lattice(i).to_f64().unwrap_or(f64::NAN)),
            Verdict::Pass => {}
        }
    }
    let lower_evidence = cache.remove(&lo).expect("evaluated").without_samples();
    let (upper, upper_method, upper_evidence) = match violation_at {
        Some(i) if (i as f64) * step_f < upper_small => (
            lattice(i).to_f64().unwrap_or(f64::NAN),
            UpperMethod::ScanViolation,
            cache.remove(&i).map(CmCheckReport::without_samples),
        ),
        _ => (upper_small, UpperMethod::SmallTCriterion, None),
    };
    Ok(DegreeBracket {
        spec: source.spec(),
        lower: lattice(lo).to_f64().unwrap_or(f64::NAN),
        upper,
        lattice_step: step.clone(),
        upper_method,
        small_t,
        lower_evidence,
        upper_evidence,
        inconclusive_lattice,
        note: EVIDENCE_NOTE.into(),
    })
}

/// Conjectured degree of `phi_{n,m}`.
pub fn conjectured_degree(n: usize, m: usize) -> usize {
    match n {
        0 => m,
        1 => m + 1,
        _ => m + 2 * (n - 1),
    }
}

/// Whether the conjectured value is an established theorem.
pub fn conjecture_proven(n: usize, m: usize) -> bool {
    matches!((n, m), (0, 0) | (1, 0) | (0, 1) | (1, 1) | (0, 2) | (1, 2)) || (n >= 2 && m == 1)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureRow {
    pub n: usize,
    pub m: usize,
    pub conjectured: usize,
    pub proven: bool,
    pub lower: Option<f64>,
    pub upper: Option<f64>,
    pub upper_method: Option<UpperMethod>,
    pub contains_conjectured: Option<bool>,
    pub error: Option<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConjectureTable {
    pub config: BracketConfig,
    pub rows: Vec<ConjectureRow>,
    pub note: String,
}

/// Brackets every `phi_{n,m}` in the ranges and compares with the conjecture.
pub fn conjecture_scan(
    n_range: std::ops::RangeInclusive<usize>,
    m_range: std::ops::RangeInclusive<usize>,
    config: &BracketConfig,
    policy: &PrecisionPolicy,
    limits: &SpecLimits,
) -> Result<ConjectureTable> {
    let cells: Vec<(usize, usize)> = n_range
        .flat_map(|n| m_range.clone().map(move |m| (n, m)))
        .collect();
    for &(n, m) in &cells {
        RemainderSpec::remainder(n, m).validate(limits)?;
    }
    let tolerance = config.lattice_step.to_f64().unwrap_or(0.05) * (1.0 + 1e-9);
    let rows = cells
        .into_iter()
        .map(|(n, m)| {
            let conjectured = conjectured_degree(n, m);
            let mut row = ConjectureRow {
                n,
                m,
                conjectured,
                proven: conjecture_proven(n, m),
                lower: None,
                upper: None,
                upper_method: None,
                contains_conjectured: None,
                error: None,
            };
            match degree_bracket(&RemainderSpec::remainder(n, m), config, policy) {
                Ok(b) => {
                    row.contains_conjectured = Some(b.contains(conjectured as f64, tolerance));
                    row.lower = Some(b.lower);
                    row.upper = Some(b.upper);
                    row.upper_method = Some(b.upper_method);
                }
                Err(e) => row.error = Some(format!("{}: {e}", e.kind())),
            }
            row
        })
        .collect();
    Ok(ConjectureTable {
        config: config.clone(),
        rows,
        note: EVIDENCE_NOTE.into(),
    })
}
