//! Bracketed root finding (Brent's method) plus the small damped-Newton
//! solver used for two-dimensional initial-condition systems.

use crate::error::{Error, Result};
use crate::numerics::Tolerance;

/// Find a root of `f` inside `[lo, hi]`.
///
/// Requires `f(lo) * f(hi) <= 0`. Inverse quadratic interpolation / secant
/// steps with a bisection safeguard; stops once the bracket width is below
/// `max(tol.abs, tol.rel * |x|)`.
pub fn find_root<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, tol: &Tolerance) -> Result<f64> {
    tol.validate()?;
    let mut a = lo;
    let mut b = hi;
    let mut fa = f(a);
    let mut fb = f(b);

    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa * fb > 0.0 {
        return Err(Error::NoBracket { lo, hi });
    }

    let mut c = a;
    let mut fc = fa;
    let mut d = b - a;
    let mut e = d;

    for _ in 0..tol.max_iter {
        if fb.abs() > fc.abs() {
            // keep b the best approximation
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let eps_step = 2.0 * f64::EPSILON * b.abs() + 0.5 * tol.abs.max(tol.rel * b.abs());
        let m = 0.5 * (c - b);
        if m.abs() <= eps_step || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() < eps_step || fa.abs() <= fb.abs() {
            d = m;
            e = m;
        } else {
            let s = fb / fa;
            let (mut p, mut q) = if a == c {
                // secant
                (2.0 * m * s, 1.0 - s)
            } else {
                // inverse quadratic interpolation
                let q0 = fa / fc;
                let r = fb / fc;
                (
                    s * (2.0 * m * q0 * (q0 - r) - (b - a) * (r - 1.0)),
                    (q0 - 1.0) * (r - 1.0) * (s - 1.0),
                )
            };
            if p > 0.0 {
                q = -q;
            }
            p = p.abs();
            if 2.0 * p < (3.0 * m * q - (eps_step * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        }
        a = b;
        fa = fb;
        b += if d.abs() > eps_step {
            d
        } else if m > 0.0 {
            eps_step
        } else {
            -eps_step
        };
        fb = f(b);
        if (fb > 0.0) == (fc > 0.0) {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
    }

    Err(Error::Convergence {
        what: "bracketed root finding".into(),
        estimate: b,
        bound: (c - b).abs(),
    })
}

/// Scan `[lo, hi]` on `n` uniform cells and return the first cell with a
/// sign change (or an exact zero) of `f`.
pub fn scan_bracket<F: Fn(f64) -> f64>(f: F, lo: f64, hi: f64, n: usize) -> Option<(f64, f64)> {
    let n = n.max(1);
    let mut x0 = lo;
    let mut f0 = f(x0);
    for i in 1..=n {
        let x1 = lo + (hi - lo) * (i as f64) / (n as f64);
        let f1 = f(x1);
        if f0 == 0.0 {
            return Some((x0, x0));
        }
        if f0.is_finite() && f1.is_finite() && f0 * f1 < 0.0 {
            return Some((x0, x1));
        }
        x0 = x1;
        f0 = f1;
    }
    if f0 == 0.0 {
        return Some((x0, x0));
    }
    None
}

/// Damped Newton iteration for a 2x2 system with a finite-difference
/// Jacobian. `x` is the initial guess; returns the root.
pub fn newton2<F>(f: F, mut x: [f64; 2], tol: &Tolerance) -> Result<[f64; 2]>
where
    F: Fn([f64; 2]) -> Result<[f64; 2]>,
{
    tol.validate()?;
    let norm = |v: [f64; 2]| v[0].hypot(v[1]);
    let mut fx = f(x)?;

    for _ in 0..tol.max_iter {
        let r = norm(fx);
        if r <= tol.abs.max(tol.rel * norm(x).max(1.0)) {
            return Ok(x);
        }
        // finite-difference Jacobian
        let mut jac = [[0.0_f64; 2]; 2];
        for j in 0..2 {
            let h = 1e-7 * x[j].abs().max(1e-7);
            let mut xp = x;
            xp[j] += h;
            let fp = f(xp)?;
            jac[0][j] = (fp[0] - fx[0]) / h;
            jac[1][j] = (fp[1] - fx[1]) / h;
        }
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det.abs() < 1e-300 {
            return Err(Error::IcSolve("singular Jacobian in Newton step".into()));
        }
        let dx = [
            -(jac[1][1] * fx[0] - jac[0][1] * fx[1]) / det,
            -(-jac[1][0] * fx[0] + jac[0][0] * fx[1]) / det,
        ];
        // backtracking line search on the residual norm
        let mut lambda = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let cand = [x[0] + lambda * dx[0], x[1] + lambda * dx[1]];
            match f(cand) {
                Ok(fc) if norm(fc) < r => {
                    x = cand;
                    fx = fc;
                    accepted = true;
                    break;
                }
                _ => lambda *= 0.5,
            }
        }
        if !accepted {
            return Err(Error::IcSolve(format!(
                "Newton stalled at ({}, {}) with residual {r:e}",
                x[0], x[1]
            )));
        }
    }
    Err(Error::IcSolve("Newton iteration cap reached".into()))
}
