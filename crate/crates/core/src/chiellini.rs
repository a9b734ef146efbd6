//! The separable solution route.
//!
//! When the Abel coefficients satisfy `d/du (g/f) = k f` with constant `k`,
//! the substitution `theta = (g/f) w` separates the equation and the wave
//! profile comes out parametrically:
//!
//! ```text
//! dxi/dtheta = D(u) / [ f(u) (theta^2 + theta + k) ]
//! g(u)/f(u)  = C^{-1} e^{F(theta, k)}          (defines u(theta))
//! du/dxi     = Q(u) / [ f(u) theta ]           (first integral)
//! ```
//!
//! with the branch function `e^{F}` depending on the sign of `4k - 1`.
//! This module detects `k` numerically, evaluates the branch functions in
//! log form (the exponent can exceed f64 range near a stationary start),
//! runs the parametric solver, and carries the closed-form families that
//! follow from it.

use crate::error::{Error, Result};
use crate::model::{abel_reduce, make_model, AbelForm, Family, RcdModel};
use crate::numerics::{self, quad_fallible, scan_bracket, Tolerance};
use crate::solution::{ParametricSolution, Route, Sample};
use std::collections::BTreeMap;

/// Which side of `k = 1/4` a certificate sits on. Equality is decided
/// within 1e-12.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KBranch {
    KgtQuarter,
    KeqQuarter,
    KltQuarter,
}

pub fn branch_of(k: f64) -> KBranch {
    if (k - 0.25).abs() <= 1e-12 {
        KBranch::KeqQuarter
    } else if k > 0.25 {
        KBranch::KgtQuarter
    } else {
        KBranch::KltQuarter
    }
}

/// Evidence that a model satisfies the separability condition, with the two
/// first-integral constants used as cross-checks against false positives.
#[derive(Debug, Clone)]
pub struct ChielliniCertificate {
    pub k: f64,
    /// Constant of `g/f - k V_f u - k int B du`.
    pub c1: f64,
    /// Constant of `(g/f)^2 - 2k int g du`.
    pub c2: f64,
    /// Max relative deviation of `d/du (g/f) - k f` over the probe grid.
    pub residual: f64,
    pub branch: KBranch,
}

/// Probe a model for the separability constant `k`.
///
/// Central finite differences of `g/f` with Richardson extrapolation on the
/// given grid; `k` is the median of the pointwise estimates. Returns `None`
/// when the deviation (or either constancy cross-check) exceeds `tol.rel`.
pub fn detect_k(
    form: &AbelForm,
    u_grid: &[f64],
    tol: &Tolerance,
) -> Result<Option<ChielliniCertificate>> {
    if u_grid.len() < 8 {
        return Err(Error::Precondition(format!(
            "k detection needs at least 8 probe points, got {}",
            u_grid.len()
        )));
    }
    let span = u_grid.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - u_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    if !(span > 0.0) {
        return Err(Error::Precondition("probe grid has zero span".into()));
    }

    let mut ks = Vec::with_capacity(u_grid.len());
    let mut hs = Vec::with_capacity(u_grid.len());
    let mut fs = Vec::with_capacity(u_grid.len());
    for &u in u_grid {
        let f = form.f(u)?;
        if f == 0.0 || !f.is_finite() {
            return Err(Error::Degenerate(format!(
                "f(u) = V_f + B(u) vanishes at probe point u = {u}"
            )));
        }
        let h = numerics::central_diff(|x| form.g_over_f(x), u, 1e-5 * span)?;
        ks.push(h / f);
        hs.push(h);
        fs.push(f);
    }
    let mut sorted = ks.clone();
    sorted.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let k = sorted[sorted.len() / 2];
    if k == 0.0 || !k.is_finite() {
        return Ok(None);
    }

    let mut resid: f64 = 0.0;
    let mut scale: f64 = 0.0;
    for i in 0..u_grid.len() {
        resid = resid.max((hs[i] - k * fs[i]).abs());
        scale = scale.max((k * fs[i]).abs());
    }
    let residual = resid / scale.max(f64::MIN_POSITIVE);
    if residual > tol.rel {
        return Ok(None);
    }

    // cross-check: the two first-integral combinations must be constant
    let u_ref = u_grid.iter().cloned().fold(f64::INFINITY, f64::min);
    let mut c1s = Vec::with_capacity(u_grid.len());
    let mut c2s = Vec::with_capacity(u_grid.len());
    let qtol = Tolerance::new(1e-12, 1e-14);
    for &u in u_grid {
        let int_b = quad_fallible(|x| form.model().b(x), u_ref, u, &qtol)?;
        let int_g = quad_fallible(|x| form.g(x), u_ref, u, &qtol)?;
        c1s.push(form.g_over_f(u)? - k * form.v_f * u - k * int_b);
        c2s.push(form.g_over_f(u)?.powi(2) - 2.0 * k * int_g);
    }
    let spread = |v: &[f64]| -> f64 {
        let max = v.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let min = v.iter().cloned().fold(f64::INFINITY, f64::min);
        max - min
    };
    let c1_scale = c1s.iter().fold(1.0_f64, |a, &b| a.max(b.abs())).max(scale);
    let c2_scale = c2s.iter().fold(1.0_f64, |a, &b| a.max(b.abs()));
    if spread(&c1s) > 100.0 * tol.rel * c1_scale || spread(&c2s) > 100.0 * tol.rel * c2_scale {
        return Ok(None);
    }

    Ok(Some(ChielliniCertificate {
        k,
        c1: c1s[c1s.len() / 2],
        c2: c2s[c2s.len() / 2],
        residual,
        branch: branch_of(k),
    }))
}

/// Wave speed fixed by the separability constant:
/// `V_f = ±sqrt(rho D0 / k) - B0`.
pub fn wave_speed_from_k(rho: f64, d0: f64, k: f64, b0: f64, plus: bool) -> Result<f64> {
    if k == 0.0 {
        return Err(Error::Domain("k = 0 has no associated wave speed".into()));
    }
    let arg = rho * d0 / k;
    if arg <= 0.0 {
        return Err(Error::Domain(format!(
            "rho*D0/k = {arg} must be positive for a real wave speed"
        )));
    }
    let root = arg.sqrt();
    Ok(if plus { root } else { -root } - b0)
}

/// `ln |e^F|` and the sign of `e^F(theta, k)`.
///
/// Working in log form matters: near a stationary initial state the
/// `k = 1/4` exponent `1/(1+2 theta)` runs into the thousands and the
/// plain value overflows f64.
pub fn log_exp_f(theta: f64, k: f64) -> Result<(f64, f64)> {
    if theta == 0.0 {
        return Ok((f64::NEG_INFINITY, 0.0));
    }
    match branch_of(k) {
        KBranch::KeqQuarter => {
            let t = 1.0 + 2.0 * theta;
            if t == 0.0 {
                return Err(Error::SingularTheta {
                    theta,
                    what: "theta = -1/2 is singular on the k = 1/4 branch".into(),
                });
            }
            Ok((
                theta.abs().ln() - t.abs().ln() + 1.0 / t,
                (theta / t).signum(),
            ))
        }
        KBranch::KgtQuarter => {
            let q = theta * theta + theta + k;
            let s = (4.0 * k - 1.0).sqrt();
            Ok((
                theta.abs().ln() - 0.5 * q.ln() - ((1.0 + 2.0 * theta) / s).atan() / s,
                theta.signum(),
            ))
        }
        KBranch::KltQuarter => {
            let q = theta * theta + theta + k;
            if q == 0.0 {
                return Err(Error::SingularTheta {
                    theta,
                    what: "theta at a root of theta^2 + theta + k".into(),
                });
            }
            let s = (1.0 - 4.0 * k).sqrt();
            let x = (1.0 + 2.0 * theta) / s;
            // real antiderivative: atanh(x) between the quadratic roots
            // (|x| < 1), atanh(1/x) outside them
            let g = if x.abs() < 1.0 { x.atanh() } else { (1.0 / x).atanh() };
            if !g.is_finite() {
                return Err(Error::Domain(format!(
                    "inadmissible inverse-hyperbolic argument at theta = {theta}"
                )));
            }
            Ok((theta.abs().ln() - 0.5 * q.abs().ln() + g / s, theta.signum()))
        }
    }
}

/// The branch function `e^{F(theta, k)}` itself (sign included).
pub fn exp_f(theta: f64, k: f64) -> Result<f64> {
    let (ln, sign) = log_exp_f(theta, k)?;
    Ok(sign * ln.exp())
}

/// Open interval of the theta line on which a solution through `theta0`
/// lives: bounded by the real roots of `theta^2 + theta + k` (where the
/// parametrization is singular) and by `theta = 0` (where `u` reaches the
/// trivial state).
pub fn theta_component(theta0: f64, k: f64) -> Result<(f64, f64)> {
    if theta0 == 0.0 {
        return Err(Error::Degenerate("theta0 = 0 is a stationary state".into()));
    }
    let mut lo = f64::NEG_INFINITY;
    let mut hi = f64::INFINITY;
    let disc = 1.0 - 4.0 * k;
    if disc >= 0.0 {
        let s = disc.sqrt();
        let r_minus = 0.5 * (-1.0 - s);
        let r_plus = 0.5 * (-1.0 + s);
        for r in [r_minus, r_plus] {
            if r < theta0 {
                lo = lo.max(r);
            } else if r > theta0 {
                hi = hi.min(r);
            } else {
                return Err(Error::SingularTheta {
                    theta: theta0,
                    what: "theta0 sits on a parametrization singularity".into(),
                });
            }
        }
    }
    if theta0 > 0.0 {
        lo = lo.max(0.0);
    } else {
        hi = hi.min(0.0);
    }
    Ok((lo, hi))
}

/// Knobs for the parametric solvers.
#[derive(Debug, Clone)]
pub struct SolveOptions {
    /// Target spacing of consecutive xi samples.
    pub target_dxi: f64,
    /// Stop marching once |u| falls to this level (auto range only).
    pub u_stop: f64,
    /// Stop marching once |xi - xi(theta0)| exceeds this (auto range only).
    pub xi_max: f64,
    pub max_nodes: usize,
    pub tol: Tolerance,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            target_dxi: 0.02,
            u_stop: 1e-3,
            xi_max: 60.0,
            max_nodes: 40_000,
            tol: Tolerance::new(1e-11, 1e-13),
        }
    }
}

/// Evaluator for one separable-route solution: the parametric derivative
/// formulas, the implicit `u(theta)` map, and the wave-equation residual.
/// Reconstructable from a solution's constants, so a CSV written earlier
/// can be re-verified.
pub struct ChielliniEval {
    form: AbelForm,
    pub k: f64,
    pub ln_abs_c: f64,
    pub sign_c: f64,
}

impl ChielliniEval {
    pub fn new(model: &RcdModel, v_f: f64, k: f64, ln_abs_c: f64, sign_c: f64) -> Result<Self> {
        Ok(ChielliniEval {
            form: abel_reduce(model, v_f)?,
            k,
            ln_abs_c,
            sign_c,
        })
    }

    /// Build from the constants map of a solution produced by this route.
    pub fn from_constants(
        model: &RcdModel,
        v_f: f64,
        constants: &BTreeMap<String, f64>,
    ) -> Result<Self> {
        let need = |name: &str| -> Result<f64> {
            constants
                .get(name)
                .copied()
                .ok_or_else(|| Error::Parse(format!("solution constants miss `{name}`")))
        };
        Self::new(model, v_f, need("k")?, need("ln_abs_C")?, need("sign_C")?)
    }

    pub fn form(&self) -> &AbelForm {
        &self.form
    }

    fn quadratic(&self, theta: f64) -> f64 {
        theta * theta + theta + self.k
    }

    /// Right-hand side of the defining relation: `C^{-1} e^{F(theta)}`.
    pub fn rhs(&self, theta: f64) -> Result<f64> {
        let (lnf, sgf) = log_exp_f(theta, self.k)?;
        Ok(sgf * self.sign_c * (lnf - self.ln_abs_c).exp())
    }

    /// Invert `g(u)/f(u) = C^{-1} e^{F(theta)}` for u near `u_hint`.
    pub fn u_of_theta(&self, theta: f64, u_hint: f64) -> Result<f64> {
        let rhs = self.rhs(theta)?;
        // closed form whenever g/f is linear in u with constant convection
        if let Some(slope) = self.linear_g_over_f_slope() {
            let u = rhs / slope;
            self.form.model().check_u(u)?;
            return Ok(u);
        }
        let phi = |u: f64| -> Result<f64> { Ok(self.form.g_over_f(u)? - rhs) };
        // expand a bracket around the hint
        let scale = u_hint.abs().max(1e-3);
        let mut w = 1e-6 * scale;
        for _ in 0..60 {
            let (a, b) = (u_hint - w, u_hint + w);
            if let (Ok(fa), Ok(fb)) = (phi(a), phi(b)) {
                if fa == 0.0 {
                    return Ok(a);
                }
                if fb == 0.0 {
                    return Ok(b);
                }
                if fa * fb < 0.0 {
                    return numerics::find_root(
                        |u| phi(u).unwrap_or(f64::NAN),
                        a,
                        b,
                        &Tolerance::new(1e-14, 1e-15),
                    );
                }
            }
            w *= 2.0;
        }
        // fall back to a scan of the validity interval
        let (lo, hi) = self.form.model().validity();
        if let Some((a, b)) = scan_bracket(|u| phi(u).unwrap_or(f64::NAN), lo, hi, 512) {
            return numerics::find_root(
                |u| phi(u).unwrap_or(f64::NAN),
                a,
                b,
                &Tolerance::new(1e-14, 1e-15),
            );
        }
        Err(Error::Inversion(format!(
            "no bracket for u(theta) at theta = {theta}"
        )))
    }

    fn linear_g_over_f_slope(&self) -> Option<f64> {
        let m = self.form.model();
        match m.family() {
            Family::LinearQ | Family::GeneralizedFisher | Family::PowerLawFisher => {
                let d0 = m.param("D0").ok()?;
                let rho = m.param("rho").ok()?;
                let b0 = m.param("B0").ok()?;
                Some(d0 * rho / (self.form.v_f + b0))
            }
            _ => None,
        }
    }

    /// du/dtheta along the solution.
    pub fn du_dtheta(&self, theta: f64, u: f64) -> Result<f64> {
        let f = self.form.f(u)?;
        let g = self.form.g(u)?;
        Ok(g / (f * f * theta * self.quadratic(theta)))
    }

    /// dxi/dtheta along the solution.
    pub fn dxi_dtheta(&self, theta: f64, u: f64) -> Result<f64> {
        let f = self.form.f(u)?;
        Ok(self.form.model().d(u)? / (f * self.quadratic(theta)))
    }

    /// du/dxi from the first integral.
    pub fn du_dxi(&self, theta: f64, u: f64) -> Result<f64> {
        let f = self.form.f(u)?;
        Ok(self.form.model().q(u)? / (f * theta))
    }

    /// First and second parametric derivatives (u', xi', u'', xi'') by
    /// logarithmic differentiation of the chain-rule expressions.
    fn parametric_derivatives(&self, theta: f64, u: f64) -> Result<(f64, f64, f64, f64)> {
        let m = self.form.model();
        let q = self.quadratic(theta);
        let qp = 2.0 * theta + 1.0;
        let f = self.form.f(u)?;
        let g = self.form.g(u)?;
        let fp = self.form.f_prime(u)?;
        let gp = self.form.g_prime(u)?;
        let d = m.d(u)?;
        let dp = m.d_prime(u)?;
        if g == 0.0 {
            return Err(Error::Degenerate(format!(
                "g(u) = 0 at an interior sample (u = {u})"
            )));
        }
        let ud = g / (f * f * theta * q);
        let xd = d / (f * q);
        let udd = ud * (ud * (gp / g - 2.0 * fp / f) - 1.0 / theta - qp / q);
        let xdd = xd * (ud * (dp / d - fp / f) - qp / q);
        Ok((ud, xd, udd, xdd))
    }

    /// Wave-equation residual at one sample, scaled by `max(1, |gamma|)`.
    pub fn residual(&self, theta: f64, u: f64) -> Result<f64> {
        let m = self.form.model();
        let (ud, xd, udd, xdd) = self.parametric_derivatives(theta, u)?;
        let u1 = ud / xd;
        let u2 = (udd * xd - ud * xdd) / (xd * xd * xd);
        let alpha = m.dln_d(u)?;
        let beta = self.form.f(u)? / m.d(u)?;
        let gamma = m.q(u)? / m.d(u)?;
        let res = u2 + alpha * u1 * u1 + beta * u1 + gamma;
        Ok(res.abs() / gamma.abs().max(1.0))
    }

    /// Relative mismatch of a stored sample against the defining relation
    /// `g(u)/f(u) = C^{-1} e^{F(theta)}`; this is the check that ties the
    /// sampled u values to their parameters.
    pub fn sample_consistency(&self, theta: f64, u: f64) -> Result<f64> {
        let lhs = self.form.g_over_f(u)?;
        let rhs = self.rhs(theta)?;
        Ok((lhs - rhs).abs() / lhs.abs().max(rhs.abs()).max(1e-12))
    }

    /// First-integral check with du/dtheta taken by finite differences of
    /// the implicit u(theta) map, independent of the analytic derivative
    /// formulas.
    pub fn first_integral_deviation(&self, theta: f64, u: f64) -> Result<f64> {
        let du_fd = numerics::central_diff(|t| self.u_of_theta(t, u), theta, 1e-6)?;
        let du_dxi = du_fd / self.dxi_dtheta(theta, u)?;
        let f = self.form.f(u)?;
        let q_u = self.form.model().q(u)?;
        if q_u == 0.0 {
            return Err(Error::Degenerate(format!("Q(u) = 0 at u = {u}")));
        }
        Ok((du_dxi * f * theta / q_u - 1.0).abs())
    }
}

/// Parametric solution through the initial data `(u0, du0)` at `xi = 0`.
///
/// `theta0` comes from the first integral, the constant `C` from the
/// defining relation at `theta0`; samples are produced by inverting the
/// defining relation for `u` and accumulating `xi` by quadrature, with
/// theta nodes inserted adaptively until consecutive xi spacing meets the
/// target. When `theta_range` is `None` the curve is marched from `theta0`
/// in the direction of increasing `xi` until `|u|` reaches `u_stop`, the
/// component boundary, or `xi_max`.
pub fn solve_theorem1(
    model: &RcdModel,
    v_f: f64,
    cert: &ChielliniCertificate,
    ic: (f64, f64),
    theta_range: Option<(f64, f64)>,
    opts: &SolveOptions,
) -> Result<ParametricSolution> {
    let (u0, du0) = ic;
    if du0 == 0.0 {
        return Err(Error::Degenerate(
            "du/dxi = 0 at the initial point makes theta0 indeterminate; \
             perturb the initial state"
                .into(),
        ));
    }
    model.check_u(u0)?;
    let form = abel_reduce(model, v_f)?;
    let f0 = form.f(u0)?;
    let q0 = form.model().q(u0)?;
    if f0 == 0.0 {
        return Err(Error::Degenerate("f(u0) = 0".into()));
    }
    let theta0 = q0 / (f0 * du0);
    if theta0 == 0.0 || !theta0.is_finite() {
        return Err(Error::Degenerate(format!(
            "theta0 = {theta0} from the initial data is unusable"
        )));
    }
    let (lnf0, sgf0) = log_exp_f(theta0, cert.k)?;
    let gof0 = form.g_over_f(u0)?;
    if gof0 == 0.0 {
        return Err(Error::Degenerate("g/f = 0 at the initial point".into()));
    }
    // C = e^{F(theta0)} * f(u0)/g(u0)
    let ln_abs_c = lnf0 - gof0.abs().ln();
    let sign_c = sgf0 * gof0.signum();

    let eval = ChielliniEval::new(model, v_f, cert.k, ln_abs_c, sign_c)?;
    let component = theta_component(theta0, cert.k)?;

    let mut nodes = match theta_range {
        Some((a, b)) => {
            let (lo, hi) = (a.min(b), a.max(b));
            if theta0 < lo - 1e-12 || theta0 > hi + 1e-12 {
                return Err(Error::Precondition(format!(
                    "theta0 = {theta0} outside the requested range [{lo}, {hi}]"
                )));
            }
            if lo <= component.0 || hi >= component.1 {
                return Err(Error::Domain(format!(
                    "requested theta range [{lo}, {hi}] crosses the admissible \
                     component ({}, {}) around theta0",
                    component.0, component.1
                )));
            }
            let mut fwd = march(&eval, theta0, u0, hi, false, opts, None)?;
            let bwd = march(&eval, theta0, u0, lo, false, opts, None)?;
            merge_marches(&mut fwd, bwd);
            fwd
        }
        None => {
            // march where xi increases
            let dir_end = if eval.dxi_dtheta(theta0, u0)? > 0.0 {
                component.1
            } else {
                component.0
            };
            march(&eval, theta0, u0, dir_end, true, opts, Some(opts.u_stop))?
        }
    };

    if nodes.len() < 2 {
        return Err(Error::Inversion(
            "parametric marching produced fewer than 2 samples".into(),
        ));
    }

    // shift xi so the theta0 node sits at xi = 0
    let xi_at_theta0 = nodes
        .iter()
        .find(|n| n.theta == theta0)
        .map(|n| n.xi)
        .unwrap_or(0.0);
    for n in nodes.iter_mut() {
        n.xi -= xi_at_theta0;
    }

    let mut constants = BTreeMap::new();
    constants.insert("k".into(), cert.k);
    constants.insert("theta0".into(), theta0);
    constants.insert("ln_abs_C".into(), ln_abs_c);
    constants.insert("sign_C".into(), sign_c);
    let c_value = sign_c * ln_abs_c.exp();
    if c_value.is_finite() {
        constants.insert("C".into(), c_value);
    }
    constants.insert("V_f".into(), v_f);
    constants.insert("u0".into(), u0);
    constants.insert("du0".into(), du0);
    constants.insert("xi0".into(), 0.0);

    let samples: Vec<Sample> = nodes
        .iter()
        .map(|n| Sample {
            t: n.theta,
            xi: n.xi,
            u: n.u,
        })
        .collect();
    let slopes: Vec<f64> = nodes.iter().map(|n| n.du_dxi).collect();
    ParametricSolution::new(Route::Chiellini, None, samples, slopes, constants)
}

struct Node {
    theta: f64,
    xi: f64,
    u: f64,
    du_dxi: f64,
}

/// Adaptive march of the parametric curve from `t0` toward `t_end`.
///
/// `open_end` marks `t_end` as an asymptotic boundary to be approached
/// geometrically rather than landed on. `u_floor` stops the march once
/// |u| drops below it.
fn march(
    eval: &ChielliniEval,
    t0: f64,
    u0: f64,
    t_end: f64,
    open_end: bool,
    opts: &SolveOptions,
    u_floor: Option<f64>,
) -> Result<Vec<Node>> {
    let mut nodes = Vec::new();
    let du0 = eval.du_dxi(t0, u0)?;
    nodes.push(Node {
        theta: t0,
        xi: 0.0,
        u: u0,
        du_dxi: du0,
    });
    if t_end == t0 {
        return Ok(nodes);
    }
    let dir = (t_end - t0).signum();
    let span_guess = if t_end.is_finite() {
        (t_end - t0).abs()
    } else {
        10.0 * t0.abs().max(1.0)
    };
    let mut dt = 1e-3 * span_guess;
    let mut t = t0;
    let mut u = u0;
    let mut xi = 0.0;
    let qtol = Tolerance::new(1e-10, 1e-13).with_max_iter(200);

    while nodes.len() < opts.max_nodes {
        let gap = if t_end.is_finite() {
            (t_end - t).abs()
        } else {
            f64::INFINITY
        };
        if gap < 4.0 * f64::EPSILON * t.abs().max(1.0) {
            break;
        }
        let mut step = dt.min(if open_end && gap.is_finite() {
            0.5 * gap
        } else {
            gap
        });
        if !step.is_finite() {
            step = dt;
        }
        let mut accepted = false;
        for _ in 0..200 {
            let t_next = t + dir * step;
            let trial = (|| -> Result<(f64, f64, f64)> {
                let u_next = eval.u_of_theta(t_next, u)?;
                let hint = std::cell::Cell::new(u);
                let dxi = quad_fallible(
                    |psi| {
                        let up = eval.u_of_theta(psi, hint.get())?;
                        hint.set(up);
                        eval.dxi_dtheta(psi, up)
                    },
                    t,
                    t_next,
                    &qtol,
                )?;
                let du = eval.du_dxi(t_next, u_next)?;
                Ok((u_next, dxi, du))
            })();
            match trial {
                Ok((u_next, dxi, du)) if dxi.is_finite() && u_next.is_finite() => {
                    if dxi.abs() > 1.5 * opts.target_dxi && step > 1e-14 * t.abs().max(1.0) {
                        step *= 0.5;
                        continue;
                    }
                    t = t_next;
                    u = u_next;
                    xi += dxi;
                    nodes.push(Node {
                        theta: t,
                        xi,
                        u,
                        du_dxi: du,
                    });
                    if dxi.abs() < 0.3 * opts.target_dxi {
                        dt = step * 2.0;
                    } else {
                        dt = step;
                    }
                    accepted = true;
                    break;
                }
                _ => {
                    if step <= 1e-14 * t.abs().max(1.0) {
                        return Ok(nodes);
                    }
                    step *= 0.5;
                }
            }
        }
        if !accepted {
            break;
        }
        if let Some(floor) = u_floor {
            if u.abs() <= floor {
                break;
            }
        }
        if xi.abs() >= opts.xi_max && u_floor.is_some() {
            break;
        }
    }
    Ok(nodes)
}

fn merge_marches(forward: &mut Vec<Node>, backward: Vec<Node>) {
    let mut merged: Vec<Node> = backward.into_iter().skip(1).rev().collect();
    merged.append(forward);
    // re-accumulate xi monotonically from the merged head
    *forward = merged;
}

/// Closed-form profile of the constant-coefficient linear model
/// `u'' + ((V_f+B0)/D0) u' + (rho/D0) u = 0`.
///
/// The discriminant `(V_f+B0)^2 - 4 D0 rho` selects the hyperbolic,
/// critically damped, or trigonometric shape; the trigonometric branch is
/// the analytic continuation of the hyperbolic one.
pub fn linear_closed_form(
    d0: f64,
    b0: f64,
    rho: f64,
    v_f: f64,
    c: f64,
    xi0: f64,
    xi: f64,
) -> Result<f64> {
    if d0 <= 0.0 {
        return Err(Error::Domain(format!("D0 must be positive, got {d0}")));
    }
    if c == 0.0 {
        return Err(Error::Domain(
            "integration constant C must be nonzero".into(),
        ));
    }
    let f0 = v_f + b0;
    if f0 == 0.0 {
        return Err(Error::Degenerate("V_f + B0 = 0".into()));
    }
    let k = rho * d0 / (f0 * f0);
    let z = xi - xi0;
    let decay = (-f0 * z / (2.0 * d0)).exp();
    if (k - 0.25).abs() <= 1e-12 {
        // critically damped: double characteristic root
        let pref = f0 * f0 / (4.0 * c * d0 * d0 * rho);
        return Ok(pref * (z + 2.0 * d0 / f0) * decay);
    }
    let delta_sq = f0 * f0 - 4.0 * d0 * rho;
    let pref = f0 * f0 / (c * d0 * rho);
    if delta_sq > 0.0 {
        let delta = delta_sq.sqrt();
        let w = delta * z / (2.0 * d0);
        Ok(pref * decay * (w.cosh() + delta / f0 * w.sinh()))
    } else {
        // analytic continuation: cosh -> cos, (delta/f0) sinh -> -(|delta|/f0) sin
        let delta = (-delta_sq).sqrt();
        let w = delta * z / (2.0 * d0);
        Ok(pref * decay * (w.cos() - delta / f0 * w.sin()))
    }
}

/// Travelling wave of the dimensionless power-law model
/// `U'' + alpha/(1-U) U'^2 + (V+1)(1-U)^alpha U' + lambda U (1-U)^{2 alpha} = 0`
/// with `lambda = k (V+1)^2`, through `U(0) = U0`, `U'(0) = dU0`.
///
/// Returns the solution and the dimensionless model it solves.
pub fn fisher_powerlaw_solution(
    alpha: f64,
    k: f64,
    v: f64,
    ic: (f64, f64),
    theta_range: Option<(f64, f64)>,
    opts: &SolveOptions,
) -> Result<(ParametricSolution, RcdModel)> {
    let (u0, du0) = ic;
    if !(u0 > 0.0 && u0 < 1.0) {
        return Err(Error::Precondition(format!(
            "U0 must lie in (0, 1), got {u0}"
        )));
    }
    if du0 == 0.0 {
        return Err(Error::Degenerate(
            "U'(0) = 0 makes theta0 indeterminate; perturb the initial state".into(),
        ));
    }
    if k <= 0.0 {
        return Err(Error::Domain(format!("k must be positive, got {k}")));
    }
    let lambda = k * (v + 1.0) * (v + 1.0);
    let mut p = BTreeMap::new();
    p.insert("D0".into(), 1.0);
    p.insert("B0".into(), 1.0);
    p.insert("rho".into(), lambda);
    p.insert("u_max".into(), 1.0);
    p.insert("alpha".into(), alpha);
    let model = make_model(Family::PowerLawFisher, &p)?;
    let cert = ChielliniCertificate {
        k,
        c1: 0.0,
        c2: 0.0,
        residual: 0.0,
        branch: branch_of(k),
    };
    let mut sol = solve_theorem1(&model, v, &cert, ic, theta_range, opts)?;
    sol.constants.insert("alpha".into(), alpha);
    sol.constants.insert("lambda".into(), lambda);
    // C0 for the dimensionless normal form U = C0^{-1} e^F
    let lnc = sol.constants["ln_abs_C"];
    let sgc = sol.constants["sign_C"];
    let c0 = sgc * lnc.exp() * lambda / (v + 1.0);
    if c0.is_finite() {
        sol.constants.insert("C0".into(), c0);
    }
    Ok((sol, model))
}

/// theta0 of the dimensionless power-law model:
/// `theta0 = k (V+1) U0 (1-U0)^alpha / U0'`.
pub fn fisher_theta0(alpha: f64, k: f64, v: f64, u0: f64, du0: f64) -> f64 {
    k * (v + 1.0) * u0 * (1.0 - u0).powf(alpha) / du0
}

/// Closed-form xi antiderivative of the dimensionless model at `k = 1/4`,
/// `alpha = -1`; difference two evaluations to get `xi(theta) - xi(theta0)`.
pub fn fisher_xi_alpha_m1(theta: f64, c0: f64, v: f64) -> f64 {
    let t = 2.0 * theta + 1.0;
    4.0 / (v + 1.0) * ((1.0 / t).exp() * (4.0 * theta + 1.0) - 2.0 * c0) / (4.0 * c0 * t)
}

/// The most general convection function (given the power-law D and Q) that
/// keeps the reduction separable, together with its parametric solver.
pub struct ConvectionSolver {
    model: RcdModel,
    pub k: f64,
    pub v_f: f64,
    sign: f64,
    d0: f64,
    b0: f64,
    rho: f64,
}

/// Build the convection-family model
/// `B(u) = ±B0 u / sqrt(1 + k B0^2 u^2/(rho D0)) - V_f` over the power-law
/// D and Q, and return a solver for its parametric solutions.
#[allow(clippy::too_many_arguments)]
pub fn convection_family(
    b0: f64,
    k: f64,
    rho: f64,
    d0: f64,
    u_max: f64,
    alpha: f64,
    v_f: f64,
    plus: bool,
) -> Result<(RcdModel, ConvectionSolver)> {
    if b0 == 0.0 {
        return Err(Error::Domain(
            "B0 = 0 degenerates the convection family".into(),
        ));
    }
    let mut p = BTreeMap::new();
    p.insert("D0".into(), d0);
    p.insert("B0".into(), b0);
    p.insert("rho".into(), rho);
    p.insert("u_max".into(), u_max);
    p.insert("alpha".into(), alpha);
    p.insert("k".into(), k);
    p.insert("sign".into(), if plus { 1.0 } else { -1.0 });
    p.insert("V_f".into(), v_f);
    let model = make_model(Family::ConvectionFamily, &p)?;
    let solver = ConvectionSolver {
        model: model.clone(),
        k,
        v_f,
        sign: if plus { 1.0 } else { -1.0 },
        d0,
        b0,
        rho,
    };
    Ok((model, solver))
}

impl ConvectionSolver {
    /// u(theta) from the closed form; errors when the radicand goes
    /// negative (outside the admissible theta window).
    pub fn u_of_theta(&self, theta: f64, c: f64) -> Result<f64> {
        let ef = exp_f(theta, self.k)?;
        let ratio = self.b0 / (c * self.d0 * self.rho);
        let radicand = ratio * ratio * ef * ef - 1.0;
        if radicand < 0.0 {
            return Err(Error::Domain(format!(
                "negative radicand at theta = {theta}; outside the admissible window"
            )));
        }
        Ok(self.sign
            * (self.rho * self.d0 / (self.k * self.b0 * self.b0)).sqrt()
            * radicand.sqrt())
    }

    /// Sample the parametric solution over `theta_range` for the given
    /// integration constant `c`, refining until the xi spacing target is
    /// met.
    pub fn solve(
        &self,
        c: f64,
        theta_range: (f64, f64),
        opts: &SolveOptions,
    ) -> Result<ParametricSolution> {
        let (a, b) = theta_range;
        if a == b {
            return Err(Error::Precondition("empty theta range".into()));
        }
        let form = abel_reduce(&self.model, self.v_f)?;
        let qtol = Tolerance::new(1e-10, 1e-13).with_max_iter(200);
        let dxi_between = |t0: f64, t1: f64| -> Result<f64> {
            quad_fallible(
                |psi| {
                    let u = self.u_of_theta(psi, c)?;
                    let f = form.f(u)?;
                    if f == 0.0 {
                        return Err(Error::Degenerate(format!("f = 0 at theta = {psi}")));
                    }
                    Ok(self.model.d(u)? / (f * (psi * psi + psi + self.k)))
                },
                t0,
                t1,
                &qtol,
            )
        };

        let n0 = 128usize;
        let mut thetas: Vec<f64> = (0..=n0)
            .map(|i| a + (b - a) * i as f64 / n0 as f64)
            .collect();
        loop {
            let mut next = Vec::with_capacity(thetas.len() * 2);
            let mut refined = false;
            for w in thetas.windows(2) {
                next.push(w[0]);
                if dxi_between(w[0], w[1])?.abs() > opts.target_dxi * 1.5 {
                    next.push(0.5 * (w[0] + w[1]));
                    refined = true;
                }
            }
            next.push(*thetas.last().unwrap());
            thetas = next;
            if !refined || thetas.len() >= opts.max_nodes {
                break;
            }
        }

        let mut samples = Vec::with_capacity(thetas.len());
        let mut slopes = Vec::with_capacity(thetas.len());
        let mut xi = 0.0;
        let mut prev: Option<f64> = None;
        for &t in &thetas {
            let u = self.u_of_theta(t, c)?;
            if let Some(p) = prev {
                xi += dxi_between(p, t)?;
            }
            let f = form.f(u)?;
            let du = if u.abs() < 1e-9 || f.abs() < 1e-12 {
                // Q/f -> (rho/(sign B0)) (1 - u/u_max)^alpha as u -> 0
                self.rho / (self.sign * self.b0) / t
            } else {
                self.model.q(u)? / (f * t)
            };
            samples.push(Sample { t, xi, u });
            slopes.push(du);
            prev = Some(t);
        }

        let mut constants = BTreeMap::new();
        constants.insert("k".into(), self.k);
        constants.insert("C".into(), c);
        constants.insert("V_f".into(), self.v_f);
        constants.insert("sign".into(), self.sign);
        ParametricSolution::new(
            Route::Chiellini,
            Some("convection".into()),
            samples,
            slopes,
            constants,
        )
    }

    /// Largest subinterval of `range` on which the radicand stays positive.
    pub fn admissible_window(&self, c: f64, range: (f64, f64), n: usize) -> Option<(f64, f64)> {
        let ok = |t: f64| self.u_of_theta(t, c).is_ok();
        let (a, b) = range;
        let n = n.max(8);
        let mut best: Option<(f64, f64)> = None;
        let mut start: Option<f64> = None;
        for i in 0..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            if ok(t) {
                if start.is_none() {
                    start = Some(t);
                }
            } else if let Some(s) = start.take() {
                let w = (s, a + (b - a) * (i - 1) as f64 / n as f64);
                if best.map_or(true, |bst| w.1 - w.0 > bst.1 - bst.0) {
                    best = Some(w);
                }
            }
        }
        if let Some(s) = start {
            let w = (s, b);
            if best.map_or(true, |bst| w.1 - w.0 > bst.1 - bst.0) {
                best = Some(w);
            }
        }
        best
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{abel_reduce, make_model, Family};

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn linear_q(d0: f64, b0: f64, rho: f64) -> RcdModel {
        make_model(
            Family::LinearQ,
            &params(&[("D0", d0), ("B0", b0), ("rho", rho)]),
        )
        .unwrap()
    }

    fn gen_fisher() -> RcdModel {
        make_model(
            Family::GeneralizedFisher,
            &params(&[
                ("D0", 1.0),
                ("B0", 0.0),
                ("rho", 1.0),
                ("u_max", 1.0),
                ("alpha", 1.0),
            ]),
        )
        .unwrap()
    }

    fn detect(model: &RcdModel, v_f: f64) -> Option<ChielliniCertificate> {
        let form = abel_reduce(model, v_f).unwrap();
        let grid = model.probe_grid(33);
        detect_k(&form, &grid, &Tolerance::new(1e-8, 0.0)).unwrap()
    }

    #[test]
    fn detect_k_linear_model() {
        let cert = detect(&linear_q(1.0, 0.0, 1.0), 1.0).unwrap();
        assert!((cert.k - 1.0).abs() < 1e-10, "k = {}", cert.k);
        assert_eq!(cert.branch, KBranch::KgtQuarter);
    }

    #[test]
    fn detect_k_generalized_fisher() {
        let cert = detect(&gen_fisher(), 2.0).unwrap();
        assert!((cert.k - 0.25).abs() < 1e-10, "k = {}", cert.k);
        assert_eq!(cert.branch, KBranch::KeqQuarter);
    }

    #[test]
    fn detect_k_rejects_quadratic_reaction() {
        let m = make_model(
            Family::Custom,
            &params(&[
                ("D0", 1.0),
                ("B0", 0.0),
                ("q2", 1.0),
                ("u_lo", 0.05),
                ("u_hi", 1.0),
            ]),
        )
        .unwrap();
        assert!(detect(&m, 1.0).is_none());
    }

    #[test]
    fn detect_k_scale_consistency() {
        // scaling Q by c and D by 1/c leaves g = DQ and hence k unchanged
        let m1 = linear_q(1.0, 0.0, 1.0);
        let m2 = linear_q(0.25, 0.0, 4.0);
        let k1 = detect(&m1, 1.5).unwrap().k;
        let k2 = detect(&m2, 1.5).unwrap().k;
        assert!((k1 - k2).abs() < 1e-10);
    }

    #[test]
    fn first_integral_constant_along_u() {
        // g/f - k V_f u - k int B du stays constant for separable families
        let m = gen_fisher();
        let v_f = 1.7;
        let form = abel_reduce(&m, v_f).unwrap();
        let cert = detect(&m, v_f).unwrap();
        let qtol = Tolerance::new(1e-13, 1e-15);
        let mut values = Vec::new();
        for i in 1..20 {
            let u = 0.045 * i as f64;
            let int_b = quad_fallible(|x| m.b(x), 0.0, u, &qtol).unwrap();
            values.push(form.g_over_f(u).unwrap() - cert.k * v_f * u - cert.k * int_b);
        }
        let (lo, hi) = values
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(l, h), &v| {
                (l.min(v), h.max(v))
            });
        assert!(hi - lo < 1e-8, "spread = {}", hi - lo);
    }

    #[test]
    fn wave_speed_examples() {
        assert!((wave_speed_from_k(1.0, 1.0, 0.25, 0.0, true).unwrap() - 2.0).abs() < 1e-15);
        assert!((wave_speed_from_k(1.0, 1.0, 1.0, 0.0, true).unwrap() - 1.0).abs() < 1e-15);
        assert!((wave_speed_from_k(4.0, 1.0, 1.0, 1.0, true).unwrap() - 1.0).abs() < 1e-15);
        assert!(wave_speed_from_k(1.0, 1.0, 0.0, 0.0, true).is_err());
        assert!(wave_speed_from_k(-1.0, 1.0, 1.0, 0.0, true).is_err());
    }

    #[test]
    fn exp_f_quarter_branch_value() {
        // theta/(1+2 theta) e^{1/(1+2 theta)} at theta = 1/2
        let v = exp_f(0.5, 0.25).unwrap();
        assert!((v - 0.25 * 0.5_f64.exp()).abs() < 1e-15);
    }

    #[test]
    fn exp_f_quarter_branch_limit() {
        let v = exp_f(1e9, 0.25).unwrap();
        assert!((v - 0.5).abs() < 1e-8);
    }

    #[test]
    fn exp_f_large_theta_limit_above_quarter() {
        let k = 1.0;
        let v = exp_f(1e10, k).unwrap();
        let expect = (-std::f64::consts::PI / (2.0 * (4.0 * k - 1.0).sqrt())).exp();
        assert!((v - expect).abs() < 1e-8);
    }

    #[test]
    fn exp_f_singularities() {
        assert!(matches!(exp_f(-0.5, 0.25), Err(Error::SingularTheta { .. })));
        // k < 1/4: roots of theta^2 + theta + k at -0.25 and -0.75
        let k = 0.1875;
        assert!(exp_f(-0.25, k).is_err());
        assert!(exp_f(-0.4, k).is_ok());
        assert!(exp_f(-0.9, k).is_ok());
        assert!(exp_f(1.0, k).is_ok());
    }

    #[test]
    fn exp_f_derivative_identity() {
        // d(e^F)/dtheta = e^F * k / (theta (theta^2 + theta + k))
        for &(theta, k) in &[(0.7, 0.25), (1.3, 0.6), (-0.4, 0.1875), (2.0, 0.125)] {
            let fd = numerics::central_diff(|t| exp_f(t, k), theta, 1e-6).unwrap();
            let v = exp_f(theta, k).unwrap();
            let expect = v * k / (theta * (theta * theta + theta + k));
            assert!(
                (fd - expect).abs() < 1e-7 * expect.abs().max(1.0),
                "theta={theta} k={k}: fd={fd} expect={expect}"
            );
        }
    }

    #[test]
    fn theta_component_partitions() {
        // k < 1/4 with roots -0.25, -0.75
        let k = 0.1875;
        assert_eq!(
            theta_component(-0.9, k).unwrap(),
            (f64::NEG_INFINITY, -0.75)
        );
        assert_eq!(theta_component(-0.5, k).unwrap(), (-0.75, -0.25));
        assert_eq!(theta_component(-0.1, k).unwrap(), (-0.25, 0.0));
        assert_eq!(theta_component(3.0, k).unwrap(), (0.0, f64::INFINITY));
        // k > 1/4: only the zero boundary
        assert_eq!(
            theta_component(-3.0, 1.0).unwrap(),
            (f64::NEG_INFINITY, 0.0)
        );
    }

    #[test]
    fn solve_matches_linear_closed_form() {
        // critically damped linear model against the closed form with its
        // constants fixed from the same initial data
        let (d0, b0, rho, v_f) = (1.0, 0.0, 1.0, 2.0); // k = 1/4
        let model = linear_q(d0, b0, rho);
        let cert = detect(&model, v_f).unwrap();

        let c = 1.0;
        // the closed form has u'(xi0) = 0 exactly (degenerate start), so
        // match initial data a little further along the profile
        let xi_start = 0.5;
        let u0s = linear_closed_form(d0, b0, rho, v_f, c, 0.0, xi_start).unwrap();
        let du0s = numerics::central_diff(
            |x| linear_closed_form(d0, b0, rho, v_f, c, 0.0, x),
            xi_start,
            1e-6,
        )
        .unwrap();

        let opts = SolveOptions {
            target_dxi: 0.01,
            xi_max: 4.0,
            u_stop: 1e-6,
            ..Default::default()
        };
        let sol = solve_theorem1(&model, v_f, &cert, (u0s, du0s), None, &opts).unwrap();
        assert!(sol.len() > 50);
        for s in sol.samples().iter().step_by(7) {
            let expect = linear_closed_form(d0, b0, rho, v_f, c, 0.0, xi_start + s.xi).unwrap();
            assert!(
                (s.u - expect).abs() < 1e-8 * expect.abs().max(1.0),
                "xi={} got {} want {}",
                s.xi,
                s.u,
                expect
            );
        }
    }

    #[test]
    fn solve_oscillatory_linear_model() {
        // k > 1/4: trigonometric branch of the linear closed form
        let (d0, b0, rho, v_f) = (1.0, 0.0, 1.0, 1.0); // k = 1, delta^2 = -3
        let model = linear_q(d0, b0, rho);
        let cert = detect(&model, v_f).unwrap();
        let c = 2.0;
        let xi_start = 0.1;
        let u0 = linear_closed_form(d0, b0, rho, v_f, c, 0.0, xi_start).unwrap();
        let du0 = numerics::central_diff(
            |x| linear_closed_form(d0, b0, rho, v_f, c, 0.0, x),
            xi_start,
            1e-6,
        )
        .unwrap();
        let opts = SolveOptions {
            target_dxi: 0.005,
            xi_max: 1.1,
            u_stop: 1e-9,
            ..Default::default()
        };
        let sol = solve_theorem1(&model, v_f, &cert, (u0, du0), None, &opts).unwrap();
        for s in sol.samples().iter().step_by(11) {
            let expect = linear_closed_form(d0, b0, rho, v_f, c, 0.0, xi_start + s.xi).unwrap();
            assert!(
                (s.u - expect).abs() < 1e-8 * expect.abs().max(1.0),
                "xi={}",
                s.xi
            );
        }
    }

    #[test]
    fn first_integral_holds_along_solution() {
        let (sol, model) =
            fisher_powerlaw_solution(1.0, 0.25, 1.0, (0.5, -0.1), None, &SolveOptions::default())
                .unwrap();
        let eval = ChielliniEval::from_constants(&model, 1.0, &sol.constants).unwrap();
        let n = sol.len();
        for s in sol.samples()[1..n - 1].iter().step_by(17) {
            let dev = eval.first_integral_deviation(s.t, s.u).unwrap();
            assert!(dev < 1e-8, "theta={} dev={dev}", s.t);
        }
    }

    #[test]
    fn residual_small_along_solution() {
        let (sol, model) =
            fisher_powerlaw_solution(0.5, 0.125, 1.5, (0.5, -0.1), None, &SolveOptions::default())
                .unwrap();
        let eval = ChielliniEval::from_constants(&model, 1.5, &sol.constants).unwrap();
        let n = sol.len();
        for s in sol.samples()[1..n - 1].iter().step_by(13) {
            let r = eval.residual(s.t, s.u).unwrap();
            assert!(r < 1e-6, "theta={} r={r}", s.t);
        }
    }

    #[test]
    fn theta0_sample_reproduces_initial_conditions() {
        let ic = (0.5, -0.1);
        let (sol, _) =
            fisher_powerlaw_solution(1.0, 0.25, 1.0, ic, None, &SolveOptions::default()).unwrap();
        let theta0 = sol.constants["theta0"];
        let idx = sol
            .samples()
            .iter()
            .position(|s| s.t == theta0)
            .expect("theta0 node present");
        let s = sol.samples()[idx];
        assert!((s.u - ic.0).abs() < 1e-12);
        assert!((sol.du_dxi()[idx] - ic.1).abs() < 1e-12);
        assert!(s.xi.abs() < 1e-12);
    }

    #[test]
    fn fisher_theta0_arithmetic() {
        let t0 = fisher_theta0(1.0, 0.25, 1.0, 0.5, 0.25);
        assert!((t0 - 0.5).abs() < 1e-15);
    }

    #[test]
    fn fisher_alpha_m1_closed_form_matches_quadrature() {
        // alpha = -1 at k = 1/4 has an elementary xi(theta)
        let (v, k, alpha) = (1.0, 0.25, -1.0);
        let ic = (0.5, -0.25);
        let opts = SolveOptions {
            target_dxi: 0.002,
            ..Default::default()
        };
        let (sol, _) = fisher_powerlaw_solution(alpha, k, v, ic, None, &opts).unwrap();
        let c0 = sol.constants["C0"];
        let theta0 = sol.constants["theta0"];
        let base = fisher_xi_alpha_m1(theta0, c0, v);
        for s in sol.samples().iter().step_by(29) {
            let expect = fisher_xi_alpha_m1(s.t, c0, v) - base;
            assert!(
                (s.xi - expect).abs() < 1e-9 * expect.abs().max(1.0),
                "theta={} xi={} expect={expect}",
                s.t,
                s.xi
            );
        }
    }

    #[test]
    fn fisher_small_theta_slope() {
        // near theta = 0 the k = 1/4 profile is linear with slope
        // (V+1) C0^{-1} e / 4; pick data with theta0 inside (-1/2, 0) so the
        // march actually ends at theta -> 0
        let (v, k, alpha) = (1.0, 0.25, 1.0);
        let ic = (0.5, -0.3);
        let (sol, _) =
            fisher_powerlaw_solution(alpha, k, v, ic, None, &SolveOptions::default()).unwrap();
        let c0 = sol.constants["C0"];
        let slope = (v + 1.0) / c0 * std::f64::consts::E / 4.0;
        let s = sol.samples().last().unwrap();
        assert!(s.u.abs() < 2e-3);
        let du = *sol.du_dxi().last().unwrap();
        assert!(
            (du - slope).abs() < 5e-3 * slope.abs(),
            "du={du} slope={slope}"
        );
    }

    #[test]
    fn large_theta_approaches_limit_monotonically() {
        // k = 1/4: U(theta) for growing theta approaches C0^{-1}/2
        let (v, k, alpha) = (1.0, 0.25, 1.0);
        // positive-slope data put theta0 on the positive axis
        let ic = (0.2, 0.05);
        let opts = SolveOptions {
            xi_max: 400.0,
            u_stop: 0.0,
            ..Default::default()
        };
        let (sol, _) = fisher_powerlaw_solution(alpha, k, v, ic, None, &opts).unwrap();
        let c0 = sol.constants["C0"];
        let limit = 0.5 / c0;
        let us: Vec<f64> = sol.samples().iter().map(|s| s.u).collect();
        for w in us.windows(2) {
            assert!(w[1] >= w[0] - 1e-12);
        }
        assert!(*us.last().unwrap() < limit);
        assert!((us.last().unwrap() - limit).abs() < 0.05 * limit);
    }

    #[test]
    fn linear_closed_form_endpoint_values() {
        // hyperbolic branch at xi = xi0
        let (d0, b0, rho, c) = (1.0, 0.0, 1.0, 2.0);
        let v_f = 3.0;
        let u = linear_closed_form(d0, b0, rho, v_f, c, 0.7, 0.7).unwrap();
        let f0 = v_f + b0;
        assert!((u - f0 * f0 / (c * d0 * rho)).abs() < 1e-14);
        // critically damped branch at xi = xi0
        let v_f = 2.0;
        let u = linear_closed_form(d0, b0, rho, v_f, c, 0.7, 0.7).unwrap();
        let f0 = v_f + b0;
        assert!((u - f0 / (2.0 * c * d0 * rho)).abs() < 1e-14);
    }

    #[test]
    fn linear_closed_form_satisfies_its_ode() {
        // u'' + 3u' + u = 0 under high-order finite differences
        let (d0, b0, rho, v_f, c) = (1.0, 0.0, 1.0, 3.0, 1.0);
        let u = |xi: f64| linear_closed_form(d0, b0, rho, v_f, c, 0.0, xi);
        for &xi in &[0.0, 0.9, 2.3, 4.4] {
            let u0 = u(xi).unwrap();
            let u1 = numerics::central_diff(u, xi, 1e-4).unwrap();
            let u2 = numerics::central_diff2(u, xi, 1e-4).unwrap();
            let res = u2 + 3.0 * u1 + u0;
            assert!(res.abs() < 1e-10 * u0.abs().max(1.0), "xi={xi} res={res}");
        }
    }

    #[test]
    fn convection_family_passes_detection() {
        let (model, _solver) = convection_family(1.0, 0.25, 1.0, 1.0, 1.0, 1.0, 0.5, true).unwrap();
        let form = abel_reduce(&model, 0.5).unwrap();
        // probe away from u = 0 where f vanishes
        let grid: Vec<f64> = (0..32).map(|i| 0.1 + 0.8 * i as f64 / 31.0).collect();
        let cert = detect_k(&form, &grid, &Tolerance::new(1e-8, 0.0))
            .unwrap()
            .expect("constructed family must be separable");
        assert!((cert.k - 0.25).abs() < 1e-8, "k = {}", cert.k);
        assert!(cert.residual < 1e-8);
    }

    #[test]
    fn convection_u_vanishes_at_radicand_boundary() {
        let (_, solver) = convection_family(1.0, 0.5, 1.0, 1.0, 1.0, 0.0, 0.5, true).unwrap();
        let c = 0.8;
        let win = solver.admissible_window(c, (0.05, 6.0), 600).unwrap();
        if let Ok(u) = solver.u_of_theta(win.0, c) {
            assert!(u.abs() < 0.15, "u at window edge = {u}");
        }
        let inside = solver.u_of_theta(0.5 * (win.0 + win.1), c).unwrap();
        assert!(inside > 0.0);
    }

    #[test]
    fn convection_first_integral_along_samples() {
        let (model, solver) = convection_family(1.0, 0.5, 1.0, 1.0, 1.0, 0.0, 0.5, true).unwrap();
        let c = 0.8;
        let win = solver.admissible_window(c, (0.05, 6.0), 600).unwrap();
        let margin = 0.05 * (win.1 - win.0);
        let sol = solver
            .solve(c, (win.0 + margin, win.1 - margin), &SolveOptions::default())
            .unwrap();
        let form = abel_reduce(&model, solver.v_f).unwrap();
        let n = sol.len();
        for (s, du) in sol.samples()[1..n - 1]
            .iter()
            .zip(&sol.du_dxi()[1..n - 1])
            .step_by(9)
        {
            let f = form.f(s.u).unwrap();
            let q = model.q(s.u).unwrap();
            let dev = (du * f * s.t / q - 1.0).abs();
            assert!(dev < 1e-7, "theta={} dev={dev}", s.t);
        }
    }
}
