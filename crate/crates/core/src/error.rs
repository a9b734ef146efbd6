//! Error type shared by every module of the crate.

use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Clone, Error)]
pub enum Error {
    /// A model family was asked for without one of its required parameters.
    #[error("missing parameter `{0}`")]
    MissingParam(String),

    /// A parameter was present but its value is not usable.
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParam { name: String, reason: String },

    /// Evaluation outside the admissible range (singular diffusion endpoint,
    /// negative radicand, excluded parameter window, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// A bracketing root-finder was called without a sign change.
    #[error("no sign change on [{lo}, {hi}]")]
    NoBracket { lo: f64, hi: f64 },

    /// An iterative kernel hit its cap. Carries the best estimate and its
    /// error bound so callers can decide whether it is still usable.
    #[error("{what} did not converge (best estimate {estimate:e}, error bound {bound:e})")]
    Convergence {
        what: String,
        estimate: f64,
        bound: f64,
    },

    /// Structurally degenerate input (vanishing f(u), a stationary initial
    /// state, a double characteristic root, ...).
    #[error("degenerate input: {0}")]
    Degenerate(String),

    /// The solution parameter hit a singular point of its branch.
    #[error("singular parameter value theta = {theta}: {what}")]
    SingularTheta { theta: f64, what: String },

    /// Inverting u(theta) from the implicit relation failed.
    #[error("inversion failed: {0}")]
    Inversion(String),

    /// The explicit PDE evolution blew up.
    #[error("instability at t = {t}: {what}")]
    Instability { t: f64, what: String },

    /// Front tracking could not find a unique level crossing.
    #[error("front tracking failed: {0}")]
    Tracking(String),

    /// An operation's stated precondition was violated.
    #[error("precondition violated: {0}")]
    Precondition(String),

    /// The nonlinear initial-condition system has no root in the search box.
    #[error("initial-condition solve failed: {0}")]
    IcSolve(String),

    /// The adaptive ODE integrator underflowed its step near a singularity.
    /// `t` is the last time it could reach.
    #[error("integration step underflow at t = {t}")]
    StepUnderflow { t: f64 },

    /// Scenario / configuration level problem.
    #[error("config error: {0}")]
    Config(String),

    /// Malformed solution file or other parse problem.
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, Error>;
