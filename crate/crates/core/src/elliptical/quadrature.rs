//! Adaptive Gauss-Kronrod (7/15) quadrature, plus a log-space wrapper for
//! positive integrands with a single dominant region over [a, inf).

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use crate::error::{Error, Result};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

/// One 15-point Kronrod estimate with an error estimate derived from the
/// embedded 7-point Gauss rule, scaled as in QUADPACK.
fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let c = 0.5 * (a + b);
    let h = 0.5 * (b - a);
    let mut fv = [0.0; 15];
    fv[7] = f(c);
    for j in 0..7 {
        let dx = h * XGK[j];
        fv[j] = f(c - dx);
        fv[14 - j] = f(c + dx);
    }
    let weight = |i: usize| WGK[if i < 8 { i } else { 14 - i }];
    let mut kronrod = 0.0;
    let mut abs_sum = 0.0;
    for (i, v) in fv.iter().enumerate() {
        kronrod += weight(i) * v;
        abs_sum += weight(i) * v.abs();
    }
    let mut gauss = WG[3] * fv[7];
    for j in (1..7).step_by(2) {
        gauss += WG[j / 2] * (fv[j] + fv[14 - j]);
    }
    let mean = 0.5 * kronrod;
    let asc: f64 = fv.iter().enumerate().map(|(i, v)| weight(i) * (v - mean).abs()).sum();
    let (kronrod, gauss, abs_sum, asc) = (kronrod * h, gauss * h, abs_sum * h.abs(), asc * h.abs());
    let mut err = (kronrod - gauss).abs();
    if asc != 0.0 && err != 0.0 {
        err = asc * (200.0 * err / asc).powf(1.5).min(1.0);
    }
    if abs_sum > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * abs_sum);
    }
    (kronrod, err)
}

struct Segment {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Segment {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Segment {}
impl PartialOrd for Segment {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Segment {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

/// Tolerances and limits for [`integrate`].
#[derive(Debug, Clone, Copy)]
pub struct Tolerance {
    pub abs: f64,
    pub rel: f64,
    pub initial_segments: usize,
    pub max_segments: usize,
}

impl Default for Tolerance {
    fn default() -> Self {
        Self {
            abs: 0.0,
            rel: 1e-12,
            initial_segments: 16,
            max_segments: 4000,
        }
    }
}

/// Integral of `f` over the finite interval [a, b], split into
/// `tol.initial_segments` equal pieces and refined adaptively.
/// Returns (value, error estimate).
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: Tolerance) -> (f64, f64) {
    if b <= a {
        return (0.0, 0.0);
    }
    let m = tol.initial_segments.max(1);
    let bounds: Vec<f64> = (0..=m)
        .map(|i| if i == m { b } else { a + (b - a) * i as f64 / m as f64 })
        .collect();
    integrate_breakpoints(f, &bounds, tol)
}

/// Like [`integrate`] over [bounds[0], bounds[last]] with the given
/// initial breakpoints. The segment with the largest error is bisected
/// until the summed error meets the tolerance.
pub fn integrate_breakpoints<F: Fn(f64) -> f64>(f: F, bounds: &[f64], tol: Tolerance) -> (f64, f64) {
    let mut heap = BinaryHeap::new();
    let (mut total, mut err) = (0.0, 0.0);
    for w in bounds.windows(2) {
        if w[1] <= w[0] {
            continue;
        }
        let (value, error) = gk15(&f, w[0], w[1]);
        total += value;
        err += error;
        heap.push(Segment {
            a: w[0],
            b: w[1],
            value,
            error,
        });
    }
    while err > tol.abs.max(tol.rel * total.abs()) && heap.len() < tol.max_segments {
        let worst = heap.pop().unwrap();
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            heap.push(worst);
            break;
        }
        let (v1, e1) = gk15(&f, worst.a, mid);
        let (v2, e2) = gk15(&f, mid, worst.b);
        total += v1 + v2 - worst.value;
        err += e1 + e2 - worst.error;
        heap.push(Segment {
            a: worst.a,
            b: mid,
            value: v1,
            error: e1,
        });
        heap.push(Segment {
            a: mid,
            b: worst.b,
            value: v2,
            error: e2,
        });
    }
    // re-sum to shed drift in the running totals
    let total = heap.iter().map(|s| s.value).sum();
    let err = heap.iter().map(|s| s.error).sum();
    (total, err)
}

/// Log-space drop below the peak beyond which the integrand is ignored.
const CUTOFF: f64 = 60.0;

/// ln of the integral over [a, inf) of exp(log_f(t)).
///
/// `log_f` must be finite or -inf, with one region of non-negligible mass
/// and decaying tails. The peak is located on a geometric grid, the
/// integration range is trimmed where log_f falls `CUTOFF` below the peak
/// and the rest is integrated adaptively after scaling by the peak value.
pub fn log_integral_to_infinity<F: Fn(f64) -> f64>(log_f: F, a: f64, rel: f64) -> Result<f64> {
    const STEPS: usize = 180;
    const RATIO: f64 = 1.25;
    // grid a, a + 1e-5 RATIO^k
    let point = |k: usize| if k == 0 { a } else { a + 1e-5 * RATIO.powi(k as i32 - 1) };
    let values: Vec<f64> = (0..STEPS).map(|k| log_f(point(k))).collect();
    let (peak_idx, &peak) = values
        .iter()
        .enumerate()
        .filter(|(_, v)| !v.is_nan())
        .max_by(|x, y| x.1.total_cmp(y.1))
        .ok_or_else(|| Error::InvalidGenerator("integrand is NaN everywhere".into()))?;
    if peak == f64::NEG_INFINITY {
        return Ok(f64::NEG_INFINITY);
    }
    if !peak.is_finite() {
        return Err(Error::InvalidGenerator("integrand is not finite".into()));
    }
    let mut lo = peak_idx;
    while lo > 0 && values[lo] > peak - CUTOFF {
        lo -= 1;
    }
    let mut hi = peak_idx;
    while hi + 1 < STEPS && values[hi] > peak - CUTOFF {
        hi += 1;
    }
    if values[hi] > peak - CUTOFF {
        return Err(Error::InvalidGenerator(
            "integrand does not decay fast enough".into(),
        ));
    }
    let scaled = |t: f64| {
        let v = log_f(t) - peak;
        if v.is_nan() {
            0.0
        } else {
            v.exp()
        }
    };
    // width of the peak region seen from `a`
    let width = (peak_idx + 1..=hi)
        .find(|&k| values[k] < peak - 1.0)
        .map(|k| point(k) - a)
        .unwrap_or(point(hi) - a);
    // geometric segment boundaries keep narrow features inside some segment
    let mut bounds = vec![point(lo)];
    let floor = a + 1e-4 * width;
    if bounds[0] < floor {
        bounds.push(floor);
    }
    let end = point(hi);
    while *bounds.last().unwrap() < end {
        let last = *bounds.last().unwrap();
        bounds.push((a + (last - a) * 1.2).min(end));
    }
    let tol = Tolerance {
        rel,
        abs: 0.0,
        initial_segments: 1,
        max_segments: 1000,
    };
    let (value, _) = integrate_breakpoints(scaled, &bounds, tol);
    Ok(peak + value.ln())
}
