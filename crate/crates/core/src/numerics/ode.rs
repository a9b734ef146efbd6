//! Embedded Dormand-Prince 5(4) integrator with PI step-size control and
//! fourth-order dense output.

use crate::error::{Error, Result};
use crate::numerics::Tolerance;

// Butcher tableau.
const A: [[f64; 6]; 6] = [
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const C: [f64; 6] = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
// (5th order) - (4th order) error weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];
// dense-output weights
const D: [f64; 7] = [
    -12715105075.0 / 11282082432.0,
    0.0,
    87487479700.0 / 32700410799.0,
    -10690763975.0 / 1880347072.0,
    701980252875.0 / 199316789632.0,
    -1453857185.0 / 822651844.0,
    69997945.0 / 29380423.0,
];

/// One accepted step with its dense-output coefficients.
#[derive(Debug, Clone)]
struct DenseStep {
    t0: f64,
    t1: f64,
    cont: [Vec<f64>; 5],
}

impl DenseStep {
    fn eval_into(&self, t: f64, out: &mut [f64]) {
        let h = self.t1 - self.t0;
        let s = if h == 0.0 { 0.0 } else { (t - self.t0) / h };
        let s1 = 1.0 - s;
        for i in 0..out.len() {
            out[i] = self.cont[0][i]
                + s * (self.cont[1][i]
                    + s1 * (self.cont[2][i]
                        + s * (self.cont[3][i] + s1 * self.cont[4][i])));
        }
    }
}

/// Result of an adaptive integration: the accepted nodes plus per-step
/// interpolation coefficients, so the solution can be sampled anywhere in
/// the integration span.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    t_start: f64,
    t_end: f64,
    steps: Vec<DenseStep>,
    y_end: Vec<f64>,
    pub n_accepted: usize,
    pub n_rejected: usize,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }
    pub fn t_start(&self) -> f64 {
        self.t_start
    }
    pub fn t_end(&self) -> f64 {
        self.t_end
    }
    pub fn y_end(&self) -> &[f64] {
        &self.y_end
    }

    /// Node times of the accepted steps (monotone in integration direction).
    pub fn nodes(&self) -> Vec<f64> {
        let mut ts: Vec<f64> = self.steps.iter().map(|s| s.t0).collect();
        ts.push(self.t_end);
        ts
    }

    /// Dense-output sample at `t`, which must lie inside the integration span.
    pub fn sample(&self, t: f64) -> Result<Vec<f64>> {
        let dir = (self.t_end - self.t_start).signum();
        let eps = 1e-12 * (1.0 + self.t_end.abs().max(self.t_start.abs()));
        if (t - self.t_start) * dir < -eps || (t - self.t_end) * dir > eps {
            return Err(Error::Domain(format!(
                "sample time {t} outside trajectory span [{}, {}]",
                self.t_start, self.t_end
            )));
        }
        // binary search over step start times
        let mut lo = 0usize;
        let mut hi = self.steps.len() - 1;
        while lo < hi {
            let mid = (lo + hi) / 2;
            if (t - self.steps[mid].t1) * dir > eps {
                lo = mid + 1;
            } else {
                hi = mid;
            }
        }
        let mut out = vec![0.0; self.dim];
        self.steps[lo].eval_into(t, &mut out);
        Ok(out)
    }

    /// Sample on a uniform grid of `n >= 2` points across `[a, b]`.
    pub fn sample_uniform(&self, a: f64, b: f64, n: usize) -> Result<Vec<(f64, Vec<f64>)>> {
        if n < 2 {
            return Err(Error::Precondition("need at least 2 grid points".into()));
        }
        let mut out = Vec::with_capacity(n);
        for i in 0..n {
            let t = a + (b - a) * (i as f64) / ((n - 1) as f64);
            out.push((t, self.sample(t)?));
        }
        Ok(out)
    }
}

/// Integrate `dy/dt = rhs(t, y)` from `t0` to `t1` (either direction).
///
/// `rhs` must fill `dydt`; it may return an error to signal that the state
/// left its admissible domain, which aborts the integration.
pub fn integrate_ode<F>(
    rhs: F,
    y0: &[f64],
    t0: f64,
    t1: f64,
    tol: &Tolerance,
) -> Result<Trajectory>
where
    F: Fn(f64, &[f64], &mut [f64]) -> Result<()>,
{
    tol.validate()?;
    let dim = y0.len();
    if dim == 0 {
        return Err(Error::Precondition("empty state vector".into()));
    }
    if t0 == t1 {
        return Err(Error::Precondition("integration span is empty".into()));
    }
    let posneg = (t1 - t0).signum();
    let rtol = tol.rel;
    let atol = tol.abs.max(1e-300);

    let mut t = t0;
    let mut y = y0.to_vec();
    let mut k: Vec<Vec<f64>> = (0..7).map(|_| vec![0.0; dim]).collect();
    rhs(t, &y, &mut k[0])?;

    // initial step heuristic
    let mut h = {
        let d0 = weighted_norm(&y, &y, rtol, atol);
        let d1 = weighted_norm(&k[0], &y, rtol, atol);
        let h0 = if d0 < 1e-5 || d1 < 1e-5 {
            1e-6
        } else {
            0.01 * d0 / d1
        };
        h0.min((t1 - t0).abs()) * posneg
    };

    let mut steps = Vec::new();
    let mut ytmp = vec![0.0; dim];
    let mut facold = 1e-4_f64;
    let max_steps = 10 * tol.max_iter.max(10_000);
    let mut n_accepted = 0usize;
    let mut n_rejected = 0usize;

    for _ in 0..max_steps {
        if (t - t1) * posneg >= 0.0 {
            return Ok(Trajectory {
                dim,
                t_start: t0,
                t_end: t,
                steps,
                y_end: y,
                n_accepted,
                n_rejected,
            });
        }
        if (t + h - t1) * posneg > 0.0 {
            h = t1 - t;
        }
        if h.abs() < 1e-14 * t.abs().max(1.0) {
            return Err(Error::StepUnderflow { t });
        }

        // stages 2..7
        for s in 0..6 {
            for i in 0..dim {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s + 1) {
                    acc += A[s][j] * kj[i];
                }
                ytmp[i] = y[i] + h * acc;
            }
            rhs(t + C[s] * h, &ytmp, &mut k[s + 1])?;
        }
        // ytmp now holds the 5th-order solution (last stage is FSAL)
        let ynew = ytmp.clone();

        let mut err = 0.0_f64;
        for i in 0..dim {
            let mut e = 0.0;
            for (j, kj) in k.iter().enumerate() {
                e += E[j] * kj[i];
            }
            e *= h;
            let sk = atol + rtol * y[i].abs().max(ynew[i].abs());
            err += (e / sk) * (e / sk);
        }
        err = (err / dim as f64).sqrt();

        // PI controller
        let expo1 = 0.2 - 0.04 * 0.75;
        let fac11 = err.powf(expo1);
        let fac = (fac11 / facold.powf(0.04) / 0.9).clamp(0.2, 10.0);
        let hnew = h / fac;

        if err <= 1.0 {
            facold = err.max(1e-4);
            // dense output coefficients
            let mut cont: [Vec<f64>; 5] = [
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
                vec![0.0; dim],
            ];
            for i in 0..dim {
                let ydiff = ynew[i] - y[i];
                let bspl = h * k[0][i] - ydiff;
                cont[0][i] = y[i];
                cont[1][i] = ydiff;
                cont[2][i] = bspl;
                cont[3][i] = ydiff - h * k[6][i] - bspl;
                let mut dsum = 0.0;
                for (j, kj) in k.iter().enumerate() {
                    dsum += D[j] * kj[i];
                }
                cont[4][i] = h * dsum;
            }
            steps.push(DenseStep {
                t0: t,
                t1: t + h,
                cont,
            });
            t += h;
            y.copy_from_slice(&ynew);
            let k6 = k[6].clone();
            k[0].copy_from_slice(&k6);
            n_accepted += 1;
            h = hnew;
        } else {
            n_rejected += 1;
            h = h / (fac11 / 0.9).min(5.0);
        }
    }

    Err(Error::Convergence {
        what: "ODE step count".into(),
        estimate: t,
        bound: (t1 - t).abs(),
    })
}

fn weighted_norm(v: &[f64], yref: &[f64], rtol: f64, atol: f64) -> f64 {
    let mut s = 0.0;
    for i in 0..v.len() {
        let sk = atol + rtol * yref[i].abs();
        s += (v[i] / sk) * (v[i] / sk);
    }
    (s / v.len() as f64).sqrt()
}
