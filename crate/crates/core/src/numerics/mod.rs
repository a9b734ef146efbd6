//! Self-contained numerical kernels: adaptive quadrature, bracketed root
//! finding, adaptive ODE integration, and the special functions the
//! closed-form solution families require.
//!
//! Everything here is a pure function of its inputs and safe to use from
//! concurrent workers.

mod ode;
mod quad;
mod root;
mod special;

pub use ode::{integrate_ode, Trajectory};
pub use quad::{quad, quad_fallible};
pub use root::{find_root, newton2, scan_bracket};
pub use special::{erf, erfc, gamma, hyp2f1, ln_gamma};

use crate::error::{Error, Result};

/// Accuracy request shared by the iterative kernels.
///
/// `max_iter` doubles as the segment cap for the adaptive quadrature and as
/// the iteration cap for root finding / ODE stepping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerance {
    pub rel: f64,
    pub abs: f64,
    pub max_iter: usize,
}

impl Tolerance {
    pub fn new(rel: f64, abs: f64) -> Self {
        Self {
            rel,
            abs,
            max_iter: 10_000,
        }
    }

    pub fn with_max_iter(mut self, max_iter: usize) -> Self {
        self.max_iter = max_iter;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.rel > 0.0) {
            return Err(Error::InvalidParam {
                name: "rel".into(),
                reason: format!("must be > 0, got {}", self.rel),
            });
        }
        if !(self.abs >= 0.0) {
            return Err(Error::InvalidParam {
                name: "abs".into(),
                reason: format!("must be >= 0, got {}", self.abs),
            });
        }
        if self.max_iter == 0 {
            return Err(Error::InvalidParam {
                name: "max_iter".into(),
                reason: "must be positive".into(),
            });
        }
        Ok(())
    }
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::new(1e-10, 1e-12)
    }
}

/// Richardson-extrapolated central difference of `f` at `x`.
///
/// Fourth-order accurate; `scale` sets the base step relative to `|x|`.
pub fn central_diff<F: Fn(f64) -> Result<f64>>(f: F, x: f64, scale: f64) -> Result<f64> {
    let h = scale * x.abs().max(1.0);
    let d = |h: f64| -> Result<f64> { Ok((f(x + h)? - f(x - h)?) / (2.0 * h)) };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

/// Fourth-order central second derivative via Richardson extrapolation.
pub fn central_diff2<F: Fn(f64) -> Result<f64>>(f: F, x: f64, scale: f64) -> Result<f64> {
    let h = scale * x.abs().max(1.0);
    let d = |h: f64| -> Result<f64> {
        Ok((f(x + h)? - 2.0 * f(x)? + f(x - h)?) / (h * h))
    };
    let d1 = d(h)?;
    let d2 = d(0.5 * h)?;
    Ok((4.0 * d2 - d1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn quad_additivity() {
        let f = |x: f64| (x.cos() + 0.3 * x).exp();
        let t = Tolerance::new(1e-12, 1e-14);
        let full = quad(f, -1.0, 2.0, &t).unwrap();
        let split = quad(f, -1.0, 0.4, &t).unwrap() + quad(f, 0.4, 2.0, &t).unwrap();
        assert!((full - split).abs() < 1e-11);
    }

    #[test]
    fn central_diff_on_exp() {
        let d = central_diff(|x| Ok(x.exp()), 0.7, 1e-4).unwrap();
        assert!((d - 0.7_f64.exp()).abs() < 1e-10);
    }

    #[test]
    fn central_diff2_on_sin() {
        let d = central_diff2(|x| Ok(x.sin()), 0.4, 1e-3).unwrap();
        assert!((d + 0.4_f64.sin()).abs() < 1e-9);
    }

    #[test]
    fn tolerance_rejects_nonsense() {
        assert!(Tolerance::new(-1.0, 0.0).validate().is_err());
        assert!(Tolerance::new(1e-9, -1.0).validate().is_err());
        assert!(Tolerance::new(1e-9, 0.0).with_max_iter(0).validate().is_err());
    }
}
