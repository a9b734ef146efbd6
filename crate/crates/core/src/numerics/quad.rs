//! Adaptive Gauss-Kronrod quadrature.
//!
//! 7-15 point pair on each segment, bisection of the segment with the
//! largest error estimate until the global bound `max(abs, rel*|result|)`
//! is met. `quad(f, a, b) == -quad(f, b, a)` holds exactly because the
//! integrand is always evaluated on the sorted interval and only the sign
//! of the final result is flipped.

use crate::error::{Error, Result};
use crate::numerics::Tolerance;
use std::cmp::Ordering;
use std::collections::BinaryHeap;

// 15-point Kronrod abscissae on [-1, 1] (positive half, descending) and the
// matching Kronrod / embedded 7-point Gauss weights.
const XGK: [f64; 8] = [
    0.991_455_371_120_813,
    0.949_107_912_342_759,
    0.864_864_423_359_769,
    0.741_531_185_599_394,
    0.586_087_235_467_691,
    0.405_845_151_377_397,
    0.207_784_955_007_898,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529,
    0.063_092_092_629_979,
    0.104_790_010_322_250,
    0.140_653_259_715_525,
    0.169_004_726_639_267,
    0.190_350_578_064_785,
    0.204_432_940_075_298,
    0.209_482_141_084_728,
];
const WG: [f64; 4] = [
    0.129_484_966_168_870,
    0.279_705_391_489_277,
    0.381_830_050_505_119,
    0.417_959_183_673_469,
];

/// One Gauss-Kronrod pass over `[a, b]`. Returns `(integral, error_estimate)`.
fn qk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> (f64, f64) {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let f_center = f(center);

    let mut res_gauss = f_center * WG[3];
    let mut res_kronrod = f_center * WGK[7];
    let mut res_abs = res_kronrod.abs();

    let mut fv = [0.0_f64; 15];
    fv[7] = f_center;

    for j in 0..7 {
        let x = half * XGK[j];
        let f1 = f(center - x);
        let f2 = f(center + x);
        fv[j] = f1;
        fv[14 - j] = f2;
        let sum = f1 + f2;
        res_kronrod += WGK[j] * sum;
        res_abs += WGK[j] * (f1.abs() + f2.abs());
        if j % 2 == 1 {
            // odd Kronrod indices carry the embedded Gauss nodes
            res_gauss += WG[j / 2] * sum;
        }
    }

    let mean = res_kronrod * 0.5;
    let mut res_asc = WGK[7] * (f_center - mean).abs();
    for j in 0..7 {
        res_asc += WGK[j] * ((fv[j] - mean).abs() + (fv[14 - j] - mean).abs());
    }

    let result = res_kronrod * half;
    res_abs *= half.abs();
    res_asc *= half.abs();

    // QUADPACK-style rescaling of the raw Gauss/Kronrod difference.
    let mut err = ((res_kronrod - res_gauss) * half).abs();
    if res_asc != 0.0 && err != 0.0 {
        err = res_asc * 1.0_f64.min((200.0 * err / res_asc).powf(1.5));
    }
    if res_abs > f64::MIN_POSITIVE / (50.0 * f64::EPSILON) {
        err = err.max(50.0 * f64::EPSILON * res_abs);
    }
    (result, err)
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
        self.error
            .partial_cmp(&other.error)
            .unwrap_or(Ordering::Equal)
    }
}

/// Adaptive integral of `f` over `[a, b]`.
///
/// `a > b` is allowed and flips the sign of the result. The error of the
/// returned value is bounded by `max(tol.abs, tol.rel * |result|)`; if the
/// subdivision cap (`tol.max_iter` segments) is hit first, the call fails
/// with [`Error::Convergence`] carrying the best estimate and its bound.
pub fn quad<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: &Tolerance) -> Result<f64> {
    tol.validate()?;
    if a == b {
        return Ok(0.0);
    }
    let (lo, hi, sign) = if a < b { (a, b, 1.0) } else { (b, a, -1.0) };
    if !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Domain(format!(
            "quad endpoints must be finite, got [{lo}, {hi}]"
        )));
    }

    let (v, e) = qk15(&f, lo, hi);
    let mut heap = BinaryHeap::new();
    heap.push(Segment {
        a: lo,
        b: hi,
        value: v,
        error: e,
    });
    let mut total_value = v;
    let mut total_error = e;

    while total_error > tol.abs.max(tol.rel * total_value.abs()) {
        if heap.len() >= tol.max_iter {
            return Err(Error::Convergence {
                what: "quadrature subdivision".into(),
                estimate: sign * total_value,
                bound: total_error,
            });
        }
        let worst = heap.pop().expect("heap cannot be empty here");
        let mid = 0.5 * (worst.a + worst.b);
        if mid <= worst.a || mid >= worst.b {
            // interval no longer splittable in f64; accept what we have
            break;
        }
        let (v1, e1) = qk15(&f, worst.a, mid);
        let (v2, e2) = qk15(&f, mid, worst.b);
        total_value += v1 + v2 - worst.value;
        total_error += e1 + e2 - worst.error;
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

    Ok(sign * total_value)
}

/// [`quad`] for integrands that can fail (domain errors near branch
/// boundaries). The first error encountered aborts the integration.
pub fn quad_fallible<F: Fn(f64) -> Result<f64>>(
    f: F,
    a: f64,
    b: f64,
    tol: &Tolerance,
) -> Result<f64> {
    let first_err = std::cell::RefCell::new(None::<Error>);
    let value = quad(
        |x| match f(x) {
            Ok(v) => v,
            Err(e) => {
                let mut slot = first_err.borrow_mut();
                if slot.is_none() {
                    *slot = Some(e);
                }
                f64::NAN
            }
        },
        a,
        b,
        tol,
    );
    if let Some(e) = first_err.into_inner() {
        return Err(e);
    }
    value
}
