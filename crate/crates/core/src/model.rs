//! Model families: the (D, B, Q) function triples, their travelling-wave
//! coefficients, the reduction to Abel form, and the dimensionless scalings
//! of the two power-law models.

use crate::error::{Error, Result};
use serde::Deserialize;
use std::collections::BTreeMap;
use std::fmt;
use std::sync::Arc;

/// Relative inset from the singular diffusion endpoint. Evaluation beyond
/// `u_max * (1 - EPS_DOM)` is a hard domain error, never a clamp: a clamp
/// would silently corrupt residual checks.
pub const EPS_DOM: f64 = 1e-9;

/// Model family tags.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    /// Constant D and B, reaction proportional to u.
    LinearQ,
    /// D = D0/(1 - u/u_max), B constant, Q = rho u (1 - u/u_max).
    GeneralizedFisher,
    /// D = D0/(1 - u/u_max)^alpha, B constant, Q = rho u (1 - u/u_max)^alpha.
    PowerLawFisher,
    /// Same D and Q as `PowerLawFisher` with the unique non-constant B(u)
    /// that keeps the Abel reduction separable.
    ConvectionFamily,
    /// D(u) Q(u) constant, B constant.
    ConstantDQ,
    /// D(u) Q(u) linear in tau = (V_f + B0) u, B constant.
    LinearDQ,
    /// D(u) Q(u) proportional to 1/u, B constant.
    InverseDQ,
    /// D(u) Q(u) = (V_f+B0) [ 2(m+1)/(m+3)^2 tau - A tau^m ], B constant.
    PowerLawDQ,
    /// Constant D and B with reaction c lambda u - A u^m.
    PowerLawReaction,
    /// User-supplied closures (or polynomial reaction via JSON params).
    Custom,
}

impl Family {
    pub fn as_str(&self) -> &'static str {
        match self {
            Family::LinearQ => "LinearQ",
            Family::GeneralizedFisher => "GeneralizedFisher",
            Family::PowerLawFisher => "PowerLawFisher",
            Family::ConvectionFamily => "ConvectionFamily",
            Family::ConstantDQ => "ConstantDQ",
            Family::LinearDQ => "LinearDQ",
            Family::InverseDQ => "InverseDQ",
            Family::PowerLawDQ => "PowerLawDQ",
            Family::PowerLawReaction => "PowerLawReaction",
            Family::Custom => "Custom",
        }
    }

    pub fn parse(s: &str) -> Result<Family> {
        Ok(match s {
            "LinearQ" => Family::LinearQ,
            "GeneralizedFisher" => Family::GeneralizedFisher,
            "PowerLawFisher" => Family::PowerLawFisher,
            "ConvectionFamily" => Family::ConvectionFamily,
            "ConstantDQ" => Family::ConstantDQ,
            "LinearDQ" => Family::LinearDQ,
            "InverseDQ" => Family::InverseDQ,
            "PowerLawDQ" => Family::PowerLawDQ,
            "PowerLawReaction" => Family::PowerLawReaction,
            "Custom" => Family::Custom,
            other => {
                return Err(Error::Config(format!("unknown family `{other}`")));
            }
        })
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// Closures for the `Custom` family.
#[derive(Clone)]
pub struct CustomFns {
    pub d: RealFn,
    pub b: RealFn,
    pub q: RealFn,
    /// Declared u-interval the closures are valid on.
    pub validity: (f64, f64),
}

/// Parsed per-family parameters; dispatch avoids map lookups in hot loops.
#[derive(Clone)]
enum Kind {
    LinearQ {
        d0: f64,
        b0: f64,
        rho: f64,
    },
    PowerFisher {
        d0: f64,
        b0: f64,
        rho: f64,
        u_max: f64,
        alpha: f64,
    },
    Convection {
        d0: f64,
        b0: f64,
        rho: f64,
        u_max: f64,
        alpha: f64,
        k: f64,
        sign: f64,
        v_f: f64,
    },
    ConstantDq {
        d0: f64,
        b0: f64,
        a: f64,
    },
    LinearDq {
        d0: f64,
        b0: f64,
        a: f64,
        beta: f64,
        v_f: f64,
    },
    InverseDq {
        d0: f64,
        b0: f64,
        big_k: f64,
    },
    PowerLawDq {
        d0: f64,
        b0: f64,
        m: f64,
        a_coef: f64,
        v_f: f64,
    },
    PowerLawReaction {
        d0: f64,
        b0: f64,
        m: f64,
        a: f64,
        lambda: f64,
    },
    Custom(CustomFns),
}

/// One reaction-convection-diffusion model instance: evaluable D, B, Q with
/// their first derivatives and a declared validity interval.
///
/// Immutable after construction; cheap to clone and safe to share between
/// concurrent workers.
#[derive(Clone)]
pub struct RcdModel {
    family: Family,
    params: BTreeMap<String, f64>,
    kind: Kind,
    /// Interval used for probe grids and certificates.
    validity: (f64, f64),
    /// Hard evaluation bounds (singularities); evaluation outside errors.
    hard: (f64, f64),
}

impl fmt::Debug for RcdModel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("RcdModel")
            .field("family", &self.family)
            .field("params", &self.params)
            .field("validity", &self.validity)
            .finish()
    }
}

fn get(params: &BTreeMap<String, f64>, name: &str) -> Result<f64> {
    params
        .get(name)
        .copied()
        .ok_or_else(|| Error::MissingParam(name.to_string()))
}

fn require_positive(name: &str, v: f64) -> Result<f64> {
    if v > 0.0 {
        Ok(v)
    } else {
        Err(Error::Domain(format!("{name} must be positive, got {v}")))
    }
}

/// Build a model from a family tag and named parameters.
///
/// Parameter names (ASCII): `D0`, `B0`, `rho`, `u_max`, `alpha`, `m`, `A`,
/// `lambda`, `K`, `k`, `sign`, `V_f`, `a`, `beta`, `b`. For `Custom`, the
/// reaction is the polynomial `q1 u + q2 u^2 + q3 u^3` with constant
/// `D = D0`, `B = B0` (closure-backed custom models go through
/// [`RcdModel::custom`]).
pub fn make_model(family: Family, params: &BTreeMap<String, f64>) -> Result<RcdModel> {
    let kind = match family {
        Family::LinearQ => Kind::LinearQ {
            d0: require_positive("D0", get(params, "D0")?)?,
            b0: get(params, "B0")?,
            rho: get(params, "rho")?,
        },
        Family::GeneralizedFisher | Family::PowerLawFisher => {
            let alpha = get(params, "alpha")?;
            if family == Family::GeneralizedFisher && (alpha - 1.0).abs() > 1e-12 {
                return Err(Error::InvalidParam {
                    name: "alpha".into(),
                    reason: format!("GeneralizedFisher requires alpha = 1, got {alpha}"),
                });
            }
            Kind::PowerFisher {
                d0: require_positive("D0", get(params, "D0")?)?,
                b0: get(params, "B0")?,
                rho: get(params, "rho")?,
                u_max: require_positive("u_max", get(params, "u_max")?)?,
                alpha,
            }
        }
        Family::ConvectionFamily => Kind::Convection {
            d0: require_positive("D0", get(params, "D0")?)?,
            b0: get(params, "B0")?,
            rho: require_positive("rho", get(params, "rho")?)?,
            u_max: require_positive("u_max", get(params, "u_max")?)?,
            alpha: get(params, "alpha")?,
            k: require_positive("k", get(params, "k")?)?,
            sign: if get(params, "sign")? >= 0.0 { 1.0 } else { -1.0 },
            v_f: get(params, "V_f")?,
        },
        Family::ConstantDQ => Kind::ConstantDq {
            d0: require_positive("D0", get(params, "D0")?)?,
            b0: get(params, "B0")?,
            a: get(params, "a")?,
        },
        Family::LinearDQ => Kind::LinearDq {
            d0: require_positive("D0", get(params, "D0")?)?,
            b0: get(params, "B0")?,
            a: get(params, "a")?,
            beta: get(params, "beta")?,
            v_f: get(params, "V_f")?,
        },
        Family::InverseDQ => Kind::InverseDq {
            d0: require_positive("D0", get(params, "D0")?)?,
            b0: get(params, "B0")?,
            big_k: get(params, "K")?,
        },
        Family::PowerLawDQ => {
            let m = get(params, "m")?;
            if m == -3.0 || m == -1.0 || m == 1.0 {
                return Err(Error::Domain(format!("m = {m} is excluded for PowerLawDQ")));
            }
            let b = get(params, "b")?;
            let sign = if get(params, "sign")? >= 0.0 { 1.0 } else { -1.0 };
            // coefficient constraint tying the power term to b
            let a_coef = sign * (m + 1.0) * (m - 1.0) * (m - 1.0) / (2.0 * (m + 3.0) * (m + 3.0))
                * b.powf(1.0 - m);
            Kind::PowerLawDq {
                d0: require_positive("D0", get(params, "D0")?)?,
                b0: get(params, "B0")?,
                m,
                a_coef,
                v_f: get(params, "V_f")?,
            }
        }
        Family::PowerLawReaction => {
            let m = get(params, "m")?;
            if m == -3.0 || m == -1.0 {
                return Err(Error::Domain(format!(
                    "m = {m} is excluded for PowerLawReaction"
                )));
            }
            Kind::PowerLawReaction {
                d0: require_positive("D0", get(params, "D0")?)?,
                b0: get(params, "B0")?,
                m,
                a: get(params, "A")?,
                lambda: get(params, "lambda")?,
            }
        }
        Family::Custom => {
            let d0 = require_positive("D0", get(params, "D0")?)?;
            let b0 = get(params, "B0")?;
            let q1 = params.get("q1").copied().unwrap_or(0.0);
            let q2 = params.get("q2").copied().unwrap_or(0.0);
            let q3 = params.get("q3").copied().unwrap_or(0.0);
            let lo = params.get("u_lo").copied().unwrap_or(f64::NEG_INFINITY);
            let hi = params.get("u_hi").copied().unwrap_or(f64::INFINITY);
            Kind::Custom(CustomFns {
                d: Arc::new(move |_| d0),
                b: Arc::new(move |_| b0),
                q: Arc::new(move |u| u * (q1 + u * (q2 + u * q3))),
                validity: (lo, hi),
            })
        }
    };

    let (validity, hard) = intervals(&kind);
    Ok(RcdModel {
        family,
        params: params.clone(),
        kind,
        validity,
        hard,
    })
}

fn intervals(kind: &Kind) -> ((f64, f64), (f64, f64)) {
    match kind {
        Kind::LinearQ { .. }
        | Kind::ConstantDq { .. }
        | Kind::LinearDq { .. }
        | Kind::PowerLawDq { .. }
        | Kind::PowerLawReaction { .. } => (
            (0.0, 1.0),
            (f64::NEG_INFINITY, f64::INFINITY),
        ),
        Kind::PowerFisher { u_max, .. } | Kind::Convection { u_max, .. } => (
            (0.0, u_max * (1.0 - EPS_DOM)),
            (f64::NEG_INFINITY, u_max * (1.0 - EPS_DOM)),
        ),
        Kind::InverseDq { .. } => ((1e-6, 1.0), (0.0, f64::INFINITY)),
        Kind::Custom(c) => (c.validity, c.validity),
    }
}

impl RcdModel {
    /// Build a `Custom` model from closures.
    pub fn custom(fns: CustomFns) -> RcdModel {
        let validity = fns.validity;
        RcdModel {
            family: Family::Custom,
            params: BTreeMap::new(),
            kind: Kind::Custom(fns),
            validity,
            hard: validity,
        }
    }

    pub fn family(&self) -> Family {
        self.family
    }

    pub fn params(&self) -> &BTreeMap<String, f64> {
        &self.params
    }

    pub fn param(&self, name: &str) -> Result<f64> {
        get(&self.params, name)
    }

    /// Interval used for probe grids and certificates.
    pub fn validity(&self) -> (f64, f64) {
        self.validity
    }

    /// Check `u` against the hard evaluation bounds.
    pub fn check_u(&self, u: f64) -> Result<()> {
        if !u.is_finite() {
            return Err(Error::Domain(format!("u = {u} is not finite")));
        }
        if u < self.hard.0 || u > self.hard.1 {
            return Err(Error::Domain(format!(
                "u = {u} outside admissible range [{}, {}]",
                self.hard.0, self.hard.1
            )));
        }
        Ok(())
    }

    /// Diffusion coefficient D(u).
    pub fn d(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.d_raw(u))
    }

    /// Convection function B(u).
    pub fn b(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.b_raw(u))
    }

    /// Reaction function Q(u).
    pub fn q(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(self.q_raw(u))
    }

    pub(crate) fn d_raw(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::LinearQ { d0, .. }
            | Kind::ConstantDq { d0, .. }
            | Kind::LinearDq { d0, .. }
            | Kind::InverseDq { d0, .. }
            | Kind::PowerLawDq { d0, .. }
            | Kind::PowerLawReaction { d0, .. } => *d0,
            Kind::PowerFisher {
                d0, u_max, alpha, ..
            }
            | Kind::Convection {
                d0, u_max, alpha, ..
            } => d0 * (1.0 - u / u_max).powf(-alpha),
            Kind::Custom(c) => (c.d)(u),
        }
    }

    pub(crate) fn b_raw(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::LinearQ { b0, .. }
            | Kind::PowerFisher { b0, .. }
            | Kind::ConstantDq { b0, .. }
            | Kind::LinearDq { b0, .. }
            | Kind::InverseDq { b0, .. }
            | Kind::PowerLawDq { b0, .. }
            | Kind::PowerLawReaction { b0, .. } => *b0,
            Kind::Convection {
                b0,
                rho,
                d0,
                k,
                sign,
                v_f,
                ..
            } => sign * b0 * u / (1.0 + k * b0 * b0 / (rho * d0) * u * u).sqrt() - v_f,
            Kind::Custom(c) => (c.b)(u),
        }
    }

    pub(crate) fn q_raw(&self, u: f64) -> f64 {
        match &self.kind {
            Kind::LinearQ { rho, .. } => rho * u,
            Kind::PowerFisher {
                rho, u_max, alpha, ..
            }
            | Kind::Convection {
                rho, u_max, alpha, ..
            } => rho * u * (1.0 - u / u_max).powf(*alpha),
            Kind::ConstantDq { d0, a, .. } => a / d0,
            Kind::LinearDq {
                d0, a, beta, v_f, b0,
            } => (beta * (v_f + b0) * u + a) / d0,
            Kind::InverseDq { d0, big_k, .. } => big_k / (d0 * u),
            Kind::PowerLawDq {
                d0,
                b0,
                m,
                a_coef,
                v_f,
            } => {
                let f0 = v_f + b0;
                let tau = f0 * u;
                f0 * (2.0 * (m + 1.0) / ((m + 3.0) * (m + 3.0)) * tau - a_coef * po(tau, *m)) / d0
            }
            Kind::PowerLawReaction {
                d0,
                b0,
                m,
                a,
                lambda,
            } => 2.0 * (m + 1.0) / ((m + 3.0) * (m + 3.0)) * (b0 * b0 / d0) * lambda * u
                - a * po(u, *m),
            Kind::Custom(c) => (c.q)(u),
        }
    }

    /// d/du ln D(u) (analytic per family; finite-difference for `Custom`).
    pub fn dln_d(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(match &self.kind {
            Kind::LinearQ { .. }
            | Kind::ConstantDq { .. }
            | Kind::LinearDq { .. }
            | Kind::InverseDq { .. }
            | Kind::PowerLawDq { .. }
            | Kind::PowerLawReaction { .. } => 0.0,
            Kind::PowerFisher { u_max, alpha, .. } | Kind::Convection { u_max, alpha, .. } => {
                alpha / (u_max * (1.0 - u / u_max))
            }
            Kind::Custom(c) => {
                let d = c.d.clone();
                crate::numerics::central_diff(move |x| Ok((d)(x).ln()), u, 1e-6)?
            }
        })
    }

    /// dD/du.
    pub fn d_prime(&self, u: f64) -> Result<f64> {
        Ok(self.dln_d(u)? * self.d_raw(u))
    }

    /// dB/du.
    pub fn b_prime(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(match &self.kind {
            Kind::Convection {
                b0,
                rho,
                d0,
                k,
                sign,
                ..
            } => {
                let c = k * b0 * b0 / (rho * d0);
                let root = (1.0 + c * u * u).sqrt();
                sign * b0 / (root * root * root)
            }
            Kind::Custom(c) => {
                let b = c.b.clone();
                crate::numerics::central_diff(move |x| Ok((b)(x)), u, 1e-6)?
            }
            _ => 0.0,
        })
    }

    /// dQ/du.
    pub fn q_prime(&self, u: f64) -> Result<f64> {
        self.check_u(u)?;
        Ok(match &self.kind {
            Kind::LinearQ { rho, .. } => *rho,
            Kind::PowerFisher {
                rho, u_max, alpha, ..
            }
            | Kind::Convection {
                rho, u_max, alpha, ..
            } => {
                let w = 1.0 - u / u_max;
                rho * w.powf(*alpha) - rho * u * alpha / u_max * w.powf(alpha - 1.0)
            }
            Kind::ConstantDq { .. } => 0.0,
            Kind::LinearDq {
                d0, beta, v_f, b0, ..
            } => beta * (v_f + b0) / d0,
            Kind::InverseDq { d0, big_k, .. } => -big_k / (d0 * u * u),
            Kind::PowerLawDq {
                d0,
                b0,
                m,
                a_coef,
                v_f,
            } => {
                let f0 = v_f + b0;
                f0 * (2.0 * (m + 1.0) / ((m + 3.0) * (m + 3.0)) * f0
                    - a_coef * m * po(f0 * u, m - 1.0) * f0)
                    / d0
            }
            Kind::PowerLawReaction {
                d0,
                b0,
                m,
                a,
                lambda,
            } => 2.0 * (m + 1.0) / ((m + 3.0) * (m + 3.0)) * (b0 * b0 / d0) * lambda
                - a * m * po(u, m - 1.0),
            Kind::Custom(c) => {
                let q = c.q.clone();
                crate::numerics::central_diff(move |x| Ok((q)(x)), u, 1e-6)?
            }
        })
    }

    /// Chebyshev-spaced probe grid on an inset of the validity interval.
    pub fn probe_grid(&self, n: usize) -> Vec<f64> {
        let (lo, hi) = self.validity;
        let span = hi - lo;
        let a = lo + 0.05 * span;
        let b = hi - 0.05 * span;
        (0..n)
            .map(|i| {
                let t = (std::f64::consts::PI * (i as f64 + 0.5) / n as f64).cos();
                0.5 * (a + b) + 0.5 * (b - a) * t
            })
            .collect()
    }
}

/// Real power that tolerates the integer-exponent cases exactly.
fn po(x: f64, p: f64) -> f64 {
    if p == p.floor() && p.abs() < 64.0 {
        x.powi(p as i32)
    } else {
        x.powf(p)
    }
}

/// Coefficients of the co-moving wave equation
/// `u'' + alpha(u) u'^2 + beta(u) u' + gamma(u) = 0`.
pub struct TwCoefficients {
    model: RcdModel,
    pub v_f: f64,
}

impl TwCoefficients {
    /// alpha(u) = d/du ln D(u)
    pub fn alpha(&self, u: f64) -> Result<f64> {
        self.model.dln_d(u)
    }
    /// beta(u) = (V_f + B(u)) / D(u)
    pub fn beta(&self, u: f64) -> Result<f64> {
        Ok((self.v_f + self.model.b(u)?) / self.model.d(u)?)
    }
    /// gamma(u) = Q(u) / D(u)
    pub fn gamma(&self, u: f64) -> Result<f64> {
        Ok(self.model.q(u)? / self.model.d(u)?)
    }
}

/// Wave-equation coefficients for `model` at wave speed `v_f`.
pub fn travelling_wave_coefficients(model: &RcdModel, v_f: f64) -> Result<TwCoefficients> {
    if v_f < 0.0 {
        return Err(Error::Precondition(format!(
            "wave speed must be >= 0, got {v_f}"
        )));
    }
    Ok(TwCoefficients {
        model: model.clone(),
        v_f,
    })
}

/// The Abel-equation data `dw/du = f w^2 + g w^3` obtained from the wave
/// equation by `sigma = du/dxi`, `v = 1/sigma`, `w = v / D(u)`, so that
/// `f(u) = V_f + B(u)` and `g(u) = D(u) Q(u)`. The separable route later
/// sets `theta = (g/f) w`.
pub struct AbelForm {
    model: RcdModel,
    pub v_f: f64,
}

impl AbelForm {
    /// f(u) = V_f + B(u)
    pub fn f(&self, u: f64) -> Result<f64> {
        Ok(self.v_f + self.model.b(u)?)
    }
    /// g(u) = D(u) Q(u)
    pub fn g(&self, u: f64) -> Result<f64> {
        Ok(self.model.d(u)? * self.model.q(u)?)
    }
    /// df/du
    pub fn f_prime(&self, u: f64) -> Result<f64> {
        self.model.b_prime(u)
    }
    /// dg/du
    pub fn g_prime(&self, u: f64) -> Result<f64> {
        Ok(self.model.d_prime(u)? * self.model.q_raw(u) + self.model.d_raw(u) * self.model.q_prime(u)?)
    }
    /// g/f
    pub fn g_over_f(&self, u: f64) -> Result<f64> {
        let f = self.f(u)?;
        if f == 0.0 {
            return Err(Error::Degenerate(format!("f(u) vanishes at u = {u}")));
        }
        Ok(self.g(u)? / f)
    }
    /// Initial value of the chain variable: `w(u0) = 1 / (D(u0) u0')`.
    pub fn w0(&self, u0: f64, du0: f64) -> Result<f64> {
        if du0 == 0.0 {
            return Err(Error::Degenerate(
                "initial slope is zero; w(u0) = 1/(D u0') is undefined".into(),
            ));
        }
        Ok(1.0 / (self.model.d(u0)? * du0))
    }
    pub fn model(&self) -> &RcdModel {
        &self.model
    }
}

/// Reduce `model` at wave speed `v_f` to its Abel form.
pub fn abel_reduce(model: &RcdModel, v_f: f64) -> Result<AbelForm> {
    if v_f < 0.0 {
        return Err(Error::Precondition(format!(
            "wave speed must be >= 0, got {v_f}"
        )));
    }
    Ok(AbelForm {
        model: model.clone(),
        v_f,
    })
}

/// Record of the scaling applied by [`nondimensionalize`], sufficient to
/// undo it: `t = t_scale T`, `x = x_scale X`, `u = u_scale U`.
#[derive(Debug, Clone, PartialEq)]
pub struct Scaling {
    pub t_scale: f64,
    pub x_scale: f64,
    pub u_scale: f64,
    pub lambda: f64,
}

/// Map a dimensional power-law model onto its dimensionless normal form.
///
/// `PowerLawFisher`/`GeneralizedFisher` map to the unit-coefficient form
/// with `lambda = rho D0 / B0^2`; `PowerLawReaction` maps to the form with
/// unit diffusion, unit convection and unit power-term coefficient. Requires
/// `B0 != 0` (the time and space scales divide by it).
pub fn nondimensionalize(model: &RcdModel) -> Result<(RcdModel, Scaling)> {
    match &model.kind {
        Kind::PowerFisher {
            d0,
            b0,
            rho,
            u_max,
            alpha,
        } => {
            if *b0 == 0.0 {
                return Err(Error::Domain(
                    "nondimensionalization undefined for B0 = 0".into(),
                ));
            }
            let lambda = rho * d0 / (b0 * b0);
            let mut p = BTreeMap::new();
            p.insert("D0".into(), 1.0);
            p.insert("B0".into(), 1.0);
            p.insert("rho".into(), lambda);
            p.insert("u_max".into(), 1.0);
            p.insert("alpha".into(), *alpha);
            let scaled = make_model(Family::PowerLawFisher, &p)?;
            Ok((
                scaled,
                Scaling {
                    t_scale: d0 / (b0 * b0),
                    x_scale: d0 / b0,
                    u_scale: *u_max,
                    lambda,
                },
            ))
        }
        Kind::PowerLawReaction {
            d0,
            b0,
            m,
            a,
            lambda,
        } => {
            if *b0 == 0.0 {
                return Err(Error::Domain(
                    "nondimensionalization undefined for B0 = 0".into(),
                ));
            }
            if *a == 0.0 {
                return Err(Error::Domain(
                    "nondimensionalization undefined for A = 0".into(),
                ));
            }
            let u_scale = (b0 * b0 / (a * d0)).powf(1.0 / (m - 1.0));
            let mut p = BTreeMap::new();
            p.insert("D0".into(), 1.0);
            p.insert("B0".into(), 1.0);
            p.insert("m".into(), *m);
            p.insert("A".into(), 1.0);
            p.insert("lambda".into(), *lambda);
            let scaled = make_model(Family::PowerLawReaction, &p)?;
            Ok((
                scaled,
                Scaling {
                    t_scale: d0 / (b0 * b0),
                    x_scale: d0 / b0,
                    u_scale,
                    lambda: *lambda,
                },
            ))
        }
        _ => Err(Error::Precondition(format!(
            "nondimensionalize supports the power-law families, not {}",
            model.family
        ))),
    }
}

/// JSON document for constructing a model: `{"family": ..., "params": {...},
/// "V_f": ...}`. Unknown keys are rejected.
#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub family: String,
    pub params: BTreeMap<String, f64>,
    #[serde(default)]
    pub v_f: Option<f64>,
    #[serde(rename = "V_f", default)]
    pub v_f_alias: Option<f64>,
}

impl ModelSpec {
    pub fn from_json(text: &str) -> Result<ModelSpec> {
        serde_json::from_str(text).map_err(|e| Error::Config(format!("model document: {e}")))
    }

    pub fn build(&self) -> Result<RcdModel> {
        make_model(Family::parse(&self.family)?, &self.params)
    }

    pub fn wave_speed(&self) -> Option<f64> {
        self.v_f_alias.or(self.v_f)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn params(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
        pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
    }

    fn linear_q() -> RcdModel {
        make_model(
            Family::LinearQ,
            &params(&[("D0", 1.0), ("B0", 0.0), ("rho", 1.0)]),
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

    #[test]
    fn linear_q_closures() {
        let m = linear_q();
        assert_eq!(m.d(0.3).unwrap(), 1.0);
        assert_eq!(m.b(0.3).unwrap(), 0.0);
        assert_eq!(m.q(0.3).unwrap(), 0.3);
    }

    #[test]
    fn generalized_fisher_closures() {
        let m = gen_fisher();
        let u = 0.5;
        assert!((m.d(u).unwrap() - 2.0).abs() < 1e-15);
        assert!((m.q(u).unwrap() - 0.25).abs() < 1e-15);
    }

    #[test]
    fn missing_parameter_is_named() {
        let err = make_model(Family::LinearQ, &params(&[("D0", 1.0), ("B0", 0.0)])).unwrap_err();
        match err {
            Error::MissingParam(name) => assert_eq!(name, "rho"),
            other => panic!("expected MissingParam, got {other:?}"),
        }
    }

    #[test]
    fn nonpositive_u_max_rejected() {
        let err = make_model(
            Family::PowerLawFisher,
            &params(&[
                ("D0", 1.0),
                ("B0", 0.0),
                ("rho", 1.0),
                ("u_max", -1.0),
                ("alpha", 2.0),
            ]),
        )
        .unwrap_err();
        assert!(matches!(err, Error::Domain(_)));
    }

    #[test]
    fn tw_coefficients_linear_case() {
        let c = travelling_wave_coefficients(&linear_q(), 2.0).unwrap();
        assert_eq!(c.alpha(0.4).unwrap(), 0.0);
        assert_eq!(c.beta(0.4).unwrap(), 2.0);
        assert!((c.gamma(0.4).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn tw_alpha_matches_log_derivative_numerically() {
        let m = gen_fisher();
        let c = travelling_wave_coefficients(&m, 1.0).unwrap();
        for &u in &[0.1, 0.3, 0.6, 0.85] {
            let analytic = c.alpha(u).unwrap();
            let expected = 1.0 / (1.0 - u);
            assert!((analytic - expected).abs() < 1e-12, "u={u}");
            let fd = crate::numerics::central_diff(|x| Ok(m.d(x)?.ln()), u, 1e-5).unwrap();
            assert!((analytic - fd).abs() < 1e-7, "u={u}");
        }
    }

    #[test]
    fn singular_endpoint_is_hard_error() {
        let m = gen_fisher();
        assert!(m.d(1.0).is_err());
        assert!(m.d(1.0 - 0.5 * EPS_DOM).is_err());
        assert!(m.d(1.0 - 2.0 * EPS_DOM).is_ok());
    }

    #[test]
    fn abel_form_linear_case() {
        let form = abel_reduce(&linear_q(), 2.0).unwrap();
        assert_eq!(form.f(0.7).unwrap(), 2.0);
        assert!((form.g(0.7).unwrap() - 0.7).abs() < 1e-15);
        // chain initial condition
        assert!((form.w0(0.5, 0.25).unwrap() - 4.0).abs() < 1e-15);
        assert!(form.w0(0.5, 0.0).is_err());
    }

    #[test]
    fn abel_form_fisher_cancellation() {
        // D * Q collapses to D0 rho u for the whole power family
        for alpha in [1.0, 2.0] {
            let fam = if alpha == 1.0 {
                Family::GeneralizedFisher
            } else {
                Family::PowerLawFisher
            };
            let m = make_model(
                fam,
                &params(&[
                    ("D0", 1.0),
                    ("B0", 0.0),
                    ("rho", 1.0),
                    ("u_max", 1.0),
                    ("alpha", alpha),
                ]),
            )
            .unwrap();
            let form = abel_reduce(&m, 1.0).unwrap();
            for i in 1..100 {
                let u = 0.0099 * i as f64;
                let g = form.g(u).unwrap();
                assert!((g - u).abs() <= 1e-12 * u.max(1e-30), "alpha={alpha} u={u}");
            }
        }
    }

    #[test]
    fn abel_round_trip_recovers_wave_speed() {
        let m = gen_fisher();
        let v_f = 1.75;
        let form = abel_reduce(&m, v_f).unwrap();
        for &u in &[0.05, 0.4, 0.8] {
            let back = form.f(u).unwrap() - m.b(u).unwrap();
            assert!((back - v_f).abs() < 1e-14);
        }
    }

    #[test]
    fn nondimensionalize_power_fisher() {
        let m = make_model(
            Family::PowerLawFisher,
            &params(&[
                ("D0", 2.0),
                ("B0", 1.0),
                ("rho", 1.0),
                ("u_max", 3.0),
                ("alpha", 1.0),
            ]),
        )
        .unwrap();
        let (scaled, s) = nondimensionalize(&m).unwrap();
        assert!((s.lambda - 2.0).abs() < 1e-15);
        assert_eq!(scaled.param("rho").unwrap(), s.lambda);
        // un-scale D, B, Q at probe points
        for &cap_u in &[0.1, 0.4, 0.7] {
            let u = s.u_scale * cap_u;
            // D(u) = D0 * Dhat(U), B = B0 * Bhat, Q = (u_scale/t_scale) Qhat
            let dhat = scaled.d(cap_u).unwrap();
            assert!((m.d(u).unwrap() - 2.0 * dhat).abs() < 1e-12);
            let bhat = scaled.b(cap_u).unwrap();
            assert!((m.b(u).unwrap() - 1.0 * bhat).abs() < 1e-12);
            let qhat = scaled.q(cap_u).unwrap();
            assert!(
                (m.q(u).unwrap() - s.u_scale / s.t_scale * qhat).abs() < 1e-12,
                "U={cap_u}"
            );
        }
    }

    #[test]
    fn nondimensionalize_power_reaction_coefficient() {
        let m = make_model(
            Family::PowerLawReaction,
            &params(&[
                ("D0", 1.0),
                ("B0", 1.0),
                ("m", 2.0),
                ("A", 1.0),
                ("lambda", 1.0),
            ]),
        )
        .unwrap();
        let (scaled, s) = nondimensionalize(&m).unwrap();
        // linear coefficient 2(m+1)/(m+3)^2 = 6/25 survives the scaling
        let c = 2.0 * 3.0 / 25.0;
        let q = scaled.q(1.0).unwrap();
        assert!((q - (c * 1.0 - 1.0)).abs() < 1e-14);
        // un-scale Q at probe points
        for &cap_u in &[0.2, 0.5, 1.1] {
            let u = s.u_scale * cap_u;
            let qhat = scaled.q(cap_u).unwrap();
            assert!((m.q(u).unwrap() - s.u_scale / s.t_scale * qhat).abs() < 1e-12);
        }
    }

    #[test]
    fn nondimensionalize_rejects_zero_b0() {
        let m = make_model(
            Family::PowerLawFisher,
            &params(&[
                ("D0", 1.0),
                ("B0", 0.0),
                ("rho", 1.0),
                ("u_max", 1.0),
                ("alpha", 1.0),
            ]),
        )
        .unwrap();
        assert!(nondimensionalize(&m).is_err());
    }

    #[test]
    fn model_spec_json_round_trip() {
        let doc = r#"{"family": "GeneralizedFisher",
                      "params": {"D0": 1.0, "B0": 0.0, "rho": 1.0, "u_max": 1.0, "alpha": 1.0},
                      "V_f": 2.0}"#;
        let spec = ModelSpec::from_json(doc).unwrap();
        assert_eq!(spec.wave_speed(), Some(2.0));
        let m = spec.build().unwrap();
        assert_eq!(m.family(), Family::GeneralizedFisher);
    }

    #[test]
    fn model_spec_rejects_unknown_keys() {
        let doc = r#"{"family": "LinearQ", "params": {}, "V_f": 1.0, "bogus": 3}"#;
        assert!(ModelSpec::from_json(doc).is_err());
    }

    #[test]
    fn convection_family_b_shape() {
        let m = make_model(
            Family::ConvectionFamily,
            &params(&[
                ("D0", 1.0),
                ("B0", 1.0),
                ("rho", 1.0),
                ("u_max", 1.0),
                ("alpha", 1.0),
                ("k", 0.25),
                ("sign", 1.0),
                ("V_f", 0.5),
            ]),
        )
        .unwrap();
        // f = V_f + B = B0 u / sqrt(1 + k B0^2 u^2 / (rho D0))
        let u = 0.6;
        let f = 0.5 + m.b(u).unwrap();
        let expect = u / (1.0 + 0.25 * u * u).sqrt();
        assert!((f - expect).abs() < 1e-14);
        // derivative closure agrees with finite differences
        let fd = crate::numerics::central_diff(|x| m.b(x), u, 1e-5).unwrap();
        assert!((m.b_prime(u).unwrap() - fd).abs() < 1e-8);
    }

    #[test]
    fn custom_polynomial_reaction() {
        let m = make_model(
            Family::Custom,
            &params(&[("D0", 1.0), ("B0", 0.0), ("q2", 1.0)]),
        )
        .unwrap();
        assert!((m.q(0.5).unwrap() - 0.25).abs() < 1e-15);
        let qp = m.q_prime(0.5).unwrap();
        assert!((qp - 1.0).abs() < 1e-7);
    }
}
