//! Parametric travelling-wave solutions: the sampled curve
//! `theta -> (xi, u)` with its constants, Hermite interpolation over `xi`,
//! and the CSV schema shared by all solution routes.

use crate::error::{Error, Result};
use std::collections::BTreeMap;
use std::fmt::Write as _;

/// Which construction produced a solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Route {
    Chiellini,
    Lemke,
    ClosedForm,
}

impl Route {
    pub fn as_str(&self) -> &'static str {
        match self {
            Route::Chiellini => "chiellini",
            Route::Lemke => "lemke",
            Route::ClosedForm => "closed-form",
        }
    }
    pub fn parse(s: &str) -> Result<Route> {
        Ok(match s {
            "chiellini" => Route::Chiellini,
            "lemke" => Route::Lemke,
            "closed-form" => Route::ClosedForm,
            other => return Err(Error::Parse(format!("unknown route `{other}`"))),
        })
    }
}

/// One sample of the parametric curve. `t` is the curve parameter (the
/// separable-route `theta`, or `eta` for the cases parameterized by it; the
/// CSV column is named `theta` either way).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sample {
    pub t: f64,
    pub xi: f64,
    pub u: f64,
}

/// A sampled parametric solution with strictly monotone `xi`.
#[derive(Debug, Clone)]
pub struct ParametricSolution {
    pub route: Route,
    /// Lemke case tag (`constant_dq`, `linear_dq`, `inverse_dq`,
    /// `powerlaw_dq`, `powerlaw_reaction`) when applicable.
    pub case_tag: Option<String>,
    samples: Vec<Sample>,
    /// du/dxi at each sample, used for Hermite interpolation and for
    /// resampling onto uniform grids.
    du_dxi: Vec<f64>,
    pub constants: BTreeMap<String, f64>,
}

impl ParametricSolution {
    /// Assemble a solution from parallel sample/derivative lists.
    ///
    /// Orientation is normalized so `xi` increases; `xi` must then be
    /// strictly monotone and every value finite.
    pub fn new(
        route: Route,
        case_tag: Option<String>,
        mut samples: Vec<Sample>,
        mut du_dxi: Vec<f64>,
        constants: BTreeMap<String, f64>,
    ) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::Precondition(format!(
                "a solution needs at least 2 samples, got {}",
                samples.len()
            )));
        }
        if samples.len() != du_dxi.len() {
            return Err(Error::Precondition(
                "sample and derivative lists differ in length".into(),
            ));
        }
        for s in &samples {
            if !(s.t.is_finite() && s.xi.is_finite() && s.u.is_finite()) {
                return Err(Error::Precondition(format!(
                    "non-finite sample (t={}, xi={}, u={})",
                    s.t, s.xi, s.u
                )));
            }
        }
        if samples.last().unwrap().xi < samples[0].xi {
            samples.reverse();
            du_dxi.reverse();
        }
        for w in samples.windows(2) {
            if !(w[1].xi > w[0].xi) {
                return Err(Error::Precondition(format!(
                    "xi must be strictly monotone (xi = {} then {})",
                    w[0].xi, w[1].xi
                )));
            }
        }
        Ok(Self {
            route,
            case_tag,
            samples,
            du_dxi,
            constants,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn samples(&self) -> &[Sample] {
        &self.samples
    }

    pub fn du_dxi(&self) -> &[f64] {
        &self.du_dxi
    }

    pub fn xi_span(&self) -> (f64, f64) {
        (self.samples[0].xi, self.samples.last().unwrap().xi)
    }

    pub fn u_range(&self) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in &self.samples {
            lo = lo.min(s.u);
            hi = hi.max(s.u);
        }
        (lo, hi)
    }

    fn segment_of(&self, xi: f64) -> Result<usize> {
        let (a, b) = self.xi_span();
        let eps = 1e-12 * (1.0 + a.abs().max(b.abs()));
        if xi < a - eps || xi > b + eps {
            return Err(Error::Domain(format!(
                "xi = {xi} outside the solution span [{a}, {b}]"
            )));
        }
        let idx = self
            .samples
            .partition_point(|s| s.xi <= xi)
            .clamp(1, self.samples.len() - 1)
            - 1;
        Ok(idx)
    }

    /// Cubic Hermite interpolation of u at `xi` using the stored analytic
    /// slopes du/dxi.
    pub fn u_at(&self, xi: f64) -> Result<f64> {
        let i = self.segment_of(xi)?;
        let (s0, s1) = (self.samples[i], self.samples[i + 1]);
        let h = s1.xi - s0.xi;
        let t = ((xi - s0.xi) / h).clamp(0.0, 1.0);
        let (m0, m1) = (self.du_dxi[i] * h, self.du_dxi[i + 1] * h);
        let t2 = t * t;
        let t3 = t2 * t;
        Ok((2.0 * t3 - 3.0 * t2 + 1.0) * s0.u
            + (t3 - 2.0 * t2 + t) * m0
            + (-2.0 * t3 + 3.0 * t2) * s1.u
            + (t3 - t2) * m1)
    }

    /// Hermite-interpolated du/dxi at `xi`.
    pub fn du_at(&self, xi: f64) -> Result<f64> {
        let i = self.segment_of(xi)?;
        let (s0, s1) = (self.samples[i], self.samples[i + 1]);
        let h = s1.xi - s0.xi;
        let t = ((xi - s0.xi) / h).clamp(0.0, 1.0);
        let (m0, m1) = (self.du_dxi[i] * h, self.du_dxi[i + 1] * h);
        let t2 = t * t;
        let d = (6.0 * t2 - 6.0 * t) * s0.u
            + (3.0 * t2 - 4.0 * t + 1.0) * m0
            + (-6.0 * t2 + 6.0 * t) * s1.u
            + (3.0 * t2 - 2.0 * t) * m1;
        Ok(d / h)
    }

    /// Serialize to the shared CSV schema: `#`-prefixed header comment block
    /// (route, case, constants in sorted order), then `theta,xi,u` rows with
    /// 17 significant digits. Bit-identical across runs for identical
    /// inputs.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        out.push_str("# abelwave parametric solution\n");
        let _ = writeln!(out, "# route: {}", self.route.as_str());
        if let Some(tag) = &self.case_tag {
            let _ = writeln!(out, "# case: {tag}");
        }
        for (k, v) in &self.constants {
            let _ = writeln!(out, "# const {k} = {}", fmt_g17(*v));
        }
        out.push_str("theta,xi,u\n");
        for (s, du) in self.samples.iter().zip(&self.du_dxi) {
            let _ = writeln!(
                out,
                "{},{},{},{}",
                fmt_g17(s.t),
                fmt_g17(s.xi),
                fmt_g17(s.u),
                fmt_g17(*du)
            );
        }
        // the 4th column carries du/dxi so a written solution can be
        // re-verified without re-deriving the route internals
        out.replace("theta,xi,u\n", "theta,xi,u,du_dxi\n")
    }

    /// Parse the CSV schema written by [`Self::to_csv`].
    pub fn from_csv(text: &str) -> Result<Self> {
        let mut route = None;
        let mut case_tag = None;
        let mut constants = BTreeMap::new();
        let mut samples = Vec::new();
        let mut du = Vec::new();
        let mut saw_header = false;

        for line in text.lines() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                let rest = rest.trim();
                if let Some(r) = rest.strip_prefix("route:") {
                    route = Some(Route::parse(r.trim())?);
                } else if let Some(c) = rest.strip_prefix("case:") {
                    case_tag = Some(c.trim().to_string());
                } else if let Some(c) = rest.strip_prefix("const ") {
                    let mut it = c.splitn(2, '=');
                    let name = it.next().unwrap_or("").trim();
                    let value = it
                        .next()
                        .ok_or_else(|| Error::Parse(format!("bad constant line `{line}`")))?
                        .trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Parse(format!("bad constant `{line}`: {e}")))?;
                    constants.insert(name.to_string(), value);
                }
                continue;
            }
            if !saw_header {
                if !line.starts_with("theta,") {
                    return Err(Error::Parse(format!("unexpected header line `{line}`")));
                }
                saw_header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() < 3 {
                return Err(Error::Parse(format!("short data row `{line}`")));
            }
            let parse = |s: &str| -> Result<f64> {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Parse(format!("bad number `{s}`: {e}")))
            };
            samples.push(Sample {
                t: parse(fields[0])?,
                xi: parse(fields[1])?,
                u: parse(fields[2])?,
            });
            du.push(if fields.len() > 3 { parse(fields[3])? } else { f64::NAN });
        }

        let route = route.ok_or_else(|| Error::Parse("missing `# route:` line".into()))?;
        // tolerate files without the derivative column by finite-differencing
        if du.iter().any(|d| d.is_nan()) {
            du = fd_slopes(&samples);
        }
        ParametricSolution::new(route, case_tag, samples, du, constants)
    }
}

fn fd_slopes(samples: &[Sample]) -> Vec<f64> {
    let n = samples.len();
    let mut out = vec![0.0; n];
    for i in 0..n {
        let (a, b) = if i == 0 {
            (i, i + 1)
        } else if i == n - 1 {
            (i - 1, i)
        } else {
            (i - 1, i + 1)
        };
        out[i] = (samples[b].u - samples[a].u) / (samples[b].xi - samples[a].xi);
    }
    out
}

/// 17-significant-digit float formatting used by every CSV writer.
pub fn fmt_g17(v: f64) -> String {
    format!("{v:.16e}")
}
