//! Moving spheres in integral form.
//!
//! For a centre `x` and radius `λ`, the Kelvin transform `u_{x,λ}` is compared
//! with `u` outside `B_λ(x)`. When `u` solves the equation,
//!
//! ```text
//! u_{x,λ}(ξ) - u(ξ) = ∫_{|z-x| ≥ λ} K(x, λ; ξ, z) H(z) dz
//! ```
//!
//! with the positive kernel [`kernel_k`] and the deficiency [`deficiency_h`].
//! This module evaluates both sides ([`kelvin_diff_direct`],
//! [`kelvin_diff_kernel`]), estimates the critical radius `λ̄(x)` from probe
//! sets, and turns the outcome into a symmetry [`Verdict`].

mod appendix;
mod exterior;
mod kernel;
mod probes;
mod verdict;

pub use appendix::{appendix_bound_ratio, appendix_bound_ratio_with, appendix_ratio_p2, APPENDIX_ORDER, SPHERE_OFFSET};
pub use exterior::{kelvin_diff_kernel, kelvin_value_integral, ExteriorQuadrature, QuadratureValue};
pub use kernel::{deficiency_h, kelvin_diff_direct, kernel_k, kernel_k_forms, Deficiency};
pub use probes::{
    design_directions, lambda_bar_estimate, min_gap, small_lambda_monotonicity, GapWitness, LambdaBar,
    MonotonicityReport, ProbeConfig,
};
pub use verdict::{
    moving_sphere_report, symmetry_verdict, MovingSphereReport, SymmetryConfig, Verdict, Witness, WitnessKind,
    LAMBDA_BAR_TOL,
};
