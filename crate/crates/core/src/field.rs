//! Scalar fields on `R^n`.
//!
//! Most of the moving-spheres machinery only needs pointwise evaluation, so it
//! works with any [`Field`]. Radial fields sampled on a grid live in
//! [`crate::quadrature::RadialField`].

use crate::error::{Error, Result};
use crate::math::norm;
use smallvec::SmallVec;

pub trait Field: Sync {
    fn dim(&self) -> usize;

    fn value(&self, y: &[f64]) -> Result<f64>;

    /// Whether `value` depends on `|y|` only.
    fn is_radial(&self) -> bool {
        false
    }
}

impl<F: Field + ?Sized> Field for &F {
    fn dim(&self) -> usize {
        (**self).dim()
    }
    fn value(&self, y: &[f64]) -> Result<f64> {
        (**self).value(y)
    }
    fn is_radial(&self) -> bool {
        (**self).is_radial()
    }
}

/// A field given by a closure.
pub struct FnField<F> {
    dim: usize,
    radial: bool,
    f: F,
}

impl<F> FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    pub fn new(dim: usize, f: F) -> Self {
        FnField { dim, radial: false, f }
    }
}

/// Wraps a radial profile `g(|y|)` as a field on `R^dim`.
pub fn radial_field<G>(dim: usize, g: G) -> FnField<impl Fn(&[f64]) -> f64 + Sync>
where
    G: Fn(f64) -> f64 + Sync,
{
    FnField {
        dim,
        radial: true,
        f: move |y: &[f64]| g(norm(y)),
    }
}

impl<F> Field for FnField<F>
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    fn dim(&self) -> usize {
        self.dim
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        if y.len() != self.dim {
            return Err(Error::Dimension {
                expected: self.dim,
                got: y.len(),
            });
        }
        let v = (self.f)(y);
        if v.is_finite() {
            Ok(v)
        } else {
            Err(Error::domain("field value is not finite"))
        }
    }

    fn is_radial(&self) -> bool {
        self.radial
    }
}

/// `y ↦ inner(y - shift)`: the field translated so that its old origin sits at `shift`.
pub struct ShiftedField<F> {
    inner: F,
    shift: SmallVec<[f64; 4]>,
}

impl<F: Field> ShiftedField<F> {
    pub fn new(inner: F, shift: &[f64]) -> Result<Self> {
        if shift.len() != inner.dim() {
            return Err(Error::Dimension {
                expected: inner.dim(),
                got: shift.len(),
            });
        }
        Ok(ShiftedField {
            inner,
            shift: shift.iter().copied().collect(),
        })
    }
}

impl<F: Field> Field for ShiftedField<F> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }

    fn value(&self, y: &[f64]) -> Result<f64> {
        let moved: SmallVec<[f64; 4]> = y.iter().zip(&self.shift).map(|(a, b)| a - b).collect();
        self.inner.value(&moved)
    }

    fn is_radial(&self) -> bool {
        self.shift.iter().all(|s| *s == 0.0) && self.inner.is_radial()
    }
}
