//! Radial discretisation of `R^n` and the integral operator
//! `(Tu)(x) = ∫ |x - y|^p f(|y|, u(y)) dy` for radial `u`.
//!
//! For radial integrands the sphere `|y| = r` is integrated out first:
//!
//! ```text
//! (Tu)(ρ) = ∫_0^∞ r^{n-1} f(r, u(r)) A_p(ρ, r) dr,
//! A_p(ρ, r) = |S^{n-2}| ∫_0^π (ρ² + r² - 2ρr cos θ)^{p/2} sin^{n-2} θ dθ.
//! ```
//!
//! The radial integral uses Gauss–Legendre panels in `ln r` up to `R_max`,
//! and beyond that a power-law model of the source integrated semi-analytically.

mod grid;
mod operator;
mod radial;

pub use grid::{
    RadialGrid, TailModel, DEFAULT_ANGULAR_ORDER, DEFAULT_NODES, DEFAULT_R_MAX, DEFAULT_R_MIN, PANEL_POINTS,
};
pub use operator::{
    angular_kernel, apply_operator, integrability_check, integrability_of_source, source_integral, source_values,
    IntegrabilityReport, OperatorOutput, RieszOperator, SourceTail,
};
pub use radial::{FieldTail, RadialField};
