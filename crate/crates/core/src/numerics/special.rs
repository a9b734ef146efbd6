//! Special functions needed by the closed-form solution families: the error
//! function and the real Gauss hypergeometric function, plus the log-gamma
//! helper the hypergeometric connection formula requires.

use crate::error::{Error, Result};

const FRAC_2_SQRT_PI: f64 = 1.128_379_167_095_512_6;

/// Error function, |absolute error| below 1e-15.
///
/// Small arguments use the cancellation-free confluent series
/// `erf(x) = (2/sqrt(pi)) x e^{-x^2} sum (2x^2)^n / (2n+1)!!`; large
/// arguments go through the complementary continued fraction. Odd symmetry
/// is applied up front.
pub fn erf(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let ax = x.abs();
    if ax == 0.0 {
        return 0.0;
    }
    let sign = x.signum();
    if ax >= 6.5 {
        // 1 - erf(6.5) ~ 3e-20, below resolution of 1.0
        return sign;
    }
    if ax <= 3.0 {
        sign * erf_series(ax)
    } else {
        sign * (1.0 - erfc_cf(ax))
    }
}

/// Complementary error function `1 - erf(x)`.
pub fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x < -6.5 {
        return 2.0;
    }
    if x <= 3.0 {
        return 1.0 - erf(x);
    }
    if x >= 27.0 {
        return 0.0;
    }
    erfc_cf(x)
}

fn erf_series(x: f64) -> f64 {
    // all-positive-term series, no cancellation
    let x2 = x * x;
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    let mut n = 0u32;
    loop {
        n += 1;
        term *= 2.0 * x2 / (2.0 * n as f64 + 1.0);
        sum += term;
        if term < 1e-18 * sum || n > 200 {
            break;
        }
    }
    FRAC_2_SQRT_PI * x * (-x2).exp() * sum
}

fn erfc_cf(x: f64) -> f64 {
    // erfc(x) = e^{-x^2}/sqrt(pi) * 1/(x + (1/2)/(x + 1/(x + (3/2)/(x + ...))))
    // evaluated by the modified Lentz algorithm.
    let tiny = 1e-300;
    let mut f = x.max(tiny);
    let mut c = f;
    let mut d = 0.0_f64;
    let mut n = 0u32;
    loop {
        n += 1;
        let a = 0.5 * n as f64;
        d = x + a * d;
        if d.abs() < tiny {
            d = tiny;
        }
        c = x + a / c;
        if c.abs() < tiny {
            c = tiny;
        }
        d = 1.0 / d;
        let delta = c * d;
        f *= delta;
        if (delta - 1.0).abs() < 1e-17 || n > 300 {
            break;
        }
    }
    (-x * x).exp() / (std::f64::consts::PI.sqrt() * f)
}

// Lanczos approximation, g = 7, 9 coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// Natural log of |Gamma(x)| together with the sign of Gamma(x).
pub fn ln_gamma(x: f64) -> Result<(f64, f64)> {
    if x.is_nan() || x.is_infinite() {
        return Err(Error::Domain(format!("ln_gamma of non-finite {x}")));
    }
    if x <= 0.0 && x == x.floor() {
        return Err(Error::Domain(format!("gamma pole at {x}")));
    }
    if x < 0.5 {
        // reflection
        let (lg, sg) = ln_gamma(1.0 - x)?;
        let sin_pi_x = (std::f64::consts::PI * x).sin();
        let val = std::f64::consts::PI.ln() - sin_pi_x.abs().ln() - lg;
        return Ok((val, sin_pi_x.signum() * sg));
    }
    let xm1 = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (xm1 + i as f64);
    }
    let t = xm1 + 7.5;
    let val = 0.5 * (2.0 * std::f64::consts::PI).ln() + (xm1 + 0.5) * t.ln() - t + acc.ln();
    Ok((val, 1.0))
}

/// Gamma(x) for real non-pole x.
pub fn gamma(x: f64) -> Result<f64> {
    let (lg, sg) = ln_gamma(x)?;
    Ok(sg * lg.exp())
}

/// Real Gauss hypergeometric function `2F1(a, b; c; z)`.
///
/// Supported argument range: `z <= 1` (the wave-solution families only call
/// it with `z` of the form `-theta^{m+1}` or inside the unit interval).
/// Arguments below -1 go through the `z/(z-1)` transformation; arguments
/// close to 1 go through the `1-z` connection formula. Relative accuracy is
/// about 1e-12 in the supported range.
pub fn hyp2f1(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Domain(format!(
            "2F1 parameter c = {c} is a non-positive integer"
        )));
    }
    if z == 0.0 {
        return Ok(1.0);
    }
    if z == 1.0 {
        // Gauss summation, valid for c - a - b > 0
        let s = c - a - b;
        if s <= 0.0 {
            return Err(Error::Domain(
                "2F1 at z = 1 requires c - a - b > 0".into(),
            ));
        }
        let (l1, s1) = ln_gamma(c)?;
        let (l2, s2) = ln_gamma(s)?;
        let (l3, s3) = ln_gamma(c - a)?;
        let (l4, s4) = ln_gamma(c - b)?;
        return Ok(s1 * s2 * s3 * s4 * (l1 + l2 - l3 - l4).exp());
    }
    if z > 1.0 {
        return Err(Error::Domain(format!(
            "2F1 argument z = {z} > 1 is outside the supported real range"
        )));
    }
    if z < 0.0 {
        // map to w = z/(z-1) in (0, 1)
        let w = z / (z - 1.0);
        let pref = (1.0 - z).powf(-a);
        return Ok(pref * hyp2f1_unit(a, c - b, c, w)?);
    }
    hyp2f1_unit(a, b, c, z)
}

/// 2F1 for 0 < z < 1.
fn hyp2f1_unit(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    debug_assert!(z > 0.0 && z < 1.0);
    if z <= 0.72 {
        return hyp2f1_series(a, b, c, z);
    }
    // connection formula in powers of 1 - z; needs c - a - b non-integer
    let s = c - a - b;
    if (s - s.round()).abs() < 1e-9 {
        return Err(Error::Convergence {
            what: format!("2F1 near z=1 with integer c-a-b = {s}"),
            estimate: f64::NAN,
            bound: f64::NAN,
        });
    }
    let w = 1.0 - z;
    let (lc, sc) = ln_gamma(c)?;
    let (ls, ss) = ln_gamma(s)?;
    let (lca, sca) = ln_gamma(c - a)?;
    let (lcb, scb) = ln_gamma(c - b)?;
    let (lms, sms) = ln_gamma(-s)?;
    let (la, sa) = ln_gamma(a)?;
    let (lb, sb) = ln_gamma(b)?;
    let coef1 = sc * ss * sca * scb * (lc + ls - lca - lcb).exp();
    let coef2 = sc * sms * sa * sb * (lc + lms - la - lb).exp();
    let term1 = coef1 * hyp2f1_series(a, b, 1.0 - s, w)?;
    let term2 = coef2 * w.powf(s) * hyp2f1_series(c - a, c - b, 1.0 + s, w)?;
    Ok(term1 + term2)
}

fn hyp2f1_series(a: f64, b: f64, c: f64, z: f64) -> Result<f64> {
    if c <= 0.0 && c == c.floor() {
        return Err(Error::Domain(format!(
            "2F1 series parameter c = {c} is a non-positive integer"
        )));
    }
    let mut term = 1.0_f64;
    let mut sum = 1.0_f64;
    for n in 0..50_000u64 {
        let nf = n as f64;
        term *= (a + nf) * (b + nf) / ((c + nf) * (nf + 1.0)) * z;
        sum += term;
        if term.abs() < 1e-16 * sum.abs().max(1e-30) {
            return Ok(sum);
        }
    }
    Err(Error::Convergence {
        what: "2F1 series".into(),
        estimate: sum,
        bound: term.abs(),
    })
}
