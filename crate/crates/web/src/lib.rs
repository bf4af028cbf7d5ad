//! Browser bindings for the demo page in `www/`.
//!
//! Every export takes plain numbers or strings and returns a JSON string, so
//! the page needs no generated TypeScript glue beyond `wasm-bindgen`'s.

use cmdeg_core::bernoulli::parse_decimal;
use cmdeg_core::cmdeg::{signed_derivative, Grid};
use cmdeg_core::kernel::{kernel_h, KernelOrder};
use cmdeg_core::remainders::{RemainderSpec, SpecLimits};
use cmdeg_core::{PrecisionPolicy, Real, Result};
use serde::Serialize;
use wasm_bindgen::prelude::*;

const DIGITS: usize = 20;

#[derive(Serialize)]
struct Point {
    x: f64,
    y: String,
}

#[derive(Serialize)]
struct Curve {
    label: String,
    points: Vec<Point>,
}

#[derive(Serialize)]
struct DerivativeRow {
    k: usize,
    value: String,
    nonnegative: bool,
}

fn to_js(r: Result<String>) -> std::result::Result<String, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

fn spec_from(text: &str) -> Result<RemainderSpec> {
    match text.split_once(',') {
        Some((n, m)) => {
            let idx = |s: &str| {
                s.trim()
                    .parse::<usize>()
                    .map_err(|_| cmdeg_core::Error::InvalidSpec(format!("bad index in {text:?}")))
            };
            let spec = RemainderSpec::remainder(idx(n)?, idx(m)?);
            spec.validate(&SpecLimits::default())?;
            Ok(spec)
        }
        None => RemainderSpec::special(text.trim()),
    }
}

/// `t^r phi(t)` sampled on a log grid, `spec` being `"n,m"` or a special name.
pub fn curve(spec: &str, r: &str, t_min: &str, t_max: &str, points: usize, bits: usize) -> Result<String> {
    let spec = spec_from(spec)?;
    let r = parse_decimal(r)?;
    let policy = PrecisionPolicy::new(bits)?;
    let bound = |s| Real::parse_decimal(s, policy.internal_bits());
    let grid = Grid::log(bound(t_min)?, bound(t_max)?, points)?;
    let mut out = Vec::with_capacity(points);
    for t in grid.points_at(policy.internal_bits()) {
        let y = signed_derivative(&spec, &r, 0, &t, &policy)?;
        out.push(Point { x: t.to_f64(), y: y.to_scientific(DIGITS) });
    }
    Ok(serde_json::to_string(&Curve { label: format!("t^{r} {spec}"), points: out }).unwrap())
}

/// `h^(j)(s)` for `j <= 4`.
pub fn kernel(order: u8, s: &str, bits: usize) -> Result<String> {
    let policy = PrecisionPolicy::new(bits)?;
    let s = Real::parse_decimal(s, policy.internal_bits())?;
    let v = kernel_h(KernelOrder::new(order)?, &s, &policy)?;
    Ok(serde_json::to_string(&v.to_scientific(DIGITS)).unwrap())
}

/// `(-1)^k [t^r phi]^{(k)}(t)` for `k = 0..=max_order`.
pub fn derivatives(spec: &str, r: &str, t: &str, max_order: usize, bits: usize) -> Result<String> {
    let spec = spec_from(spec)?;
    let r = parse_decimal(r)?;
    let policy = PrecisionPolicy::new(bits)?;
    let t = Real::parse_decimal(t, policy.internal_bits())?;
    let rows = (0..=max_order)
        .map(|k| {
            let v = signed_derivative(&spec, &r, k, &t, &policy)?;
            Ok(DerivativeRow { k, nonnegative: !v.is_negative(), value: v.to_scientific(DIGITS) })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(serde_json::to_string(&rows).unwrap())
}

#[wasm_bindgen(js_name = curve)]
pub fn curve_js(spec: &str, r: &str, t_min: &str, t_max: &str, points: usize, bits: usize) -> std::result::Result<String, JsError> {
    to_js(curve(spec, r, t_min, t_max, points, bits))
}

#[wasm_bindgen(js_name = kernel)]
pub fn kernel_js(order: u8, s: &str, bits: usize) -> std::result::Result<String, JsError> {
    to_js(kernel(order, s, bits))
}

#[wasm_bindgen(js_name = derivatives)]
pub fn derivatives_js(spec: &str, r: &str, t: &str, max_order: usize, bits: usize) -> std::result::Result<String, JsError> {
    to_js(derivatives(spec, r, t, max_order, bits))
}
