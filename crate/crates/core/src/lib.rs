//! # abelwave
//!
//! Exact travelling-wave solutions of one-dimensional
//! reaction-convection-diffusion equations
//!
//! ```text
//! du/dt = d/dx [ D(u) du/dx ] + B(u) du/dx + Q(u)
//! ```
//!
//! built by reducing the co-moving wave equation to a first-kind Abel
//! equation and exploiting two of its integrability structures: a
//! differential condition `d/du (g/f) = k f` that makes the equation
//! separable, and a change of independent variable `tau = integral f du`
//! that turns it into a second-order equation solvable for several families
//! of the product `D(u) Q(u)`.
//!
//! The crate is organized as:
//!
//! - [`numerics`]: quadrature, root finding, an adaptive Runge-Kutta pair,
//!   `erf` and real `2F1`
//! - [`model`]: the model families (diffusion / convection / reaction
//!   triples) and their reduction to wave-equation and Abel-equation form
//! - [`solution`]: the parametric solution container and its CSV schema
//! - [`chiellini`]: the separable route (detection of `k`, the branch
//!   functions, the parametric solver, the closed-form families)
//! - [`lemke`]: the second-order route and its four exactly solvable cases
//! - [`oracle`]: independent verification by direct ODE shooting, direct
//!   PDE evolution, residual meters, front-speed estimation

pub mod chiellini;
pub mod error;
pub mod lemke;
pub mod model;
pub mod numerics;
pub mod oracle;
pub mod solution;

pub use error::{Error, Result};
pub use numerics::Tolerance;
