#![cfg_attr(not(feature = "std"), no_std)]
#![allow(clippy::neg_cmp_op_on_partial_ord)]

//! Numerics for positive solutions of the Riesz-type integral equation
//!
//! ```text
//! u(x) = ∫_{R^n} |x - y|^p f(|y|, u(y)) dy,     p > 0,
//! ```
//!
//! and for the method of moving spheres that establishes their radial
//! symmetry.
//!
//! The crate is organised by concern:
//!
//! * [`geometry`]: inversion through spheres, the Kelvin transform and the
//!   algebraic identities they satisfy.
//! * [`nonlinearity`]: evaluable right-hand sides `f(α, β)`, the structural
//!   comparison condition on `f`, and its Hyder–Ngô specialisation.
//! * [`quadrature`]: radial grids, interpolated radial fields and the
//!   discretised integral operator `T`.
//! * [`solver`]: damped Picard iteration for `u = T(u)`.
//! * [`movingspheres`]: the comparison kernel `K`, the deficiency `H`, both
//!   representations of `u_{x,λ} - u`, critical radii and symmetry verdicts.
//! * [`gjms`]: spectral multipliers of the fractional GJMS operator on the
//!   round sphere and the stereographic pullback.
//!
//! Everything here is `no_std` + `alloc`; the `std` feature only switches on
//! `std::error::Error` plumbing and the `parallel` feature fans work out over
//! rayon.

extern crate alloc;

pub mod error;
pub mod field;
pub mod geometry;
pub mod gjms;
pub mod movingspheres;
pub mod nonlinearity;
pub mod quadrature;
pub mod sampling;
pub mod solver;

mod gauss;
mod math;
mod par;

pub use error::{Error, Result};
pub use field::{radial_field, Field, FnField, ShiftedField};
pub use gauss::GaussLegendre;
pub use geometry::{InversionSphere, Point};
pub use math::{ball_volume, rel_diff, sphere_area};
pub use nonlinearity::{Family, NonlinearitySpec};
pub use quadrature::{RadialField, RadialGrid};
