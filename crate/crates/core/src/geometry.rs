//! Inversion through spheres and the Kelvin transform.
//!
//! For a sphere `∂B_λ(x)` the inversion is
//!
//! ```text
//! ξ^{x,λ} = x + λ² (ξ - x) / |ξ - x|²
//! ```
//!
//! and the Kelvin transform of `u` with exponent `p` is
//! `u_{x,λ}(ξ) = (|ξ - x| / λ)^p · u(ξ^{x,λ})`.

use core::fmt;
use core::ops::Deref;

use smallvec::SmallVec;

use crate::error::{Error, Result};
use crate::field::Field;
use crate::math::{abs, dist, pow};

/// Evaluations closer than this fraction of `λ` to the centre are rejected.
pub const CENTER_GUARD: f64 = 1e-12;

/// A point of `R^n`, `n ≥ 2`.
#[derive(Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(transparent))]
pub struct Point(SmallVec<[f64; 4]>);

impl Point {
    pub fn new(coords: &[f64]) -> Result<Self> {
        if coords.len() < 2 {
            return Err(Error::param("point", "dimension must be at least 2"));
        }
        if coords.iter().any(|c| !c.is_finite()) {
            return Err(Error::param("point", "coordinates must be finite"));
        }
        Ok(Point(coords.iter().copied().collect()))
    }

    pub fn origin(n: usize) -> Self {
        Point(core::iter::repeat_n(0.0, n).collect())
    }

    /// `r · e_axis`.
    pub fn on_axis(n: usize, axis: usize, r: f64) -> Self {
        let mut p = Point::origin(n);
        p.0[axis] = r;
        p
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        crate::math::norm(&self.0)
    }

    pub fn distance(&self, other: &Point) -> f64 {
        dist(&self.0, &other.0)
    }

    /// `self + t · dir`.
    pub fn offset(&self, dir: &[f64], t: f64) -> Point {
        Point(self.0.iter().zip(dir).map(|(a, d)| a + t * d).collect())
    }

    pub fn scaled(&self, t: f64) -> Point {
        Point(self.0.iter().map(|a| a * t).collect())
    }

    pub(crate) fn from_iter_unchecked(it: impl IntoIterator<Item = f64>) -> Self {
        Point(it.into_iter().collect())
    }
}

impl Deref for Point {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl fmt::Debug for Point {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.0.iter()).finish()
    }
}

/// The sphere `∂B_λ(x)` used for inversion.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct InversionSphere {
    center: Point,
    radius: f64,
}

impl InversionSphere {
    pub fn new(center: Point, radius: f64) -> Result<Self> {
        if !(radius > 0.0) || !radius.is_finite() {
            return Err(Error::param("radius", "must be positive and finite"));
        }
        Ok(InversionSphere { center, radius })
    }

    pub fn center(&self) -> &Point {
        &self.center
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn dim(&self) -> usize {
        self.center.dim()
    }

    fn check(&self, xi: &[f64]) -> Result<f64> {
        if xi.len() != self.dim() {
            return Err(Error::Dimension {
                expected: self.dim(),
                got: xi.len(),
            });
        }
        let d = dist(xi, &self.center);
        if !(d >= CENTER_GUARD * self.radius) {
            return Err(Error::domain("inversion is undefined at the sphere centre"));
        }
        Ok(d)
    }

    /// `ξ^{x,λ}`.
    pub fn invert(&self, xi: &[f64]) -> Result<Point> {
        let d = self.check(xi)?;
        let s = (self.radius / d) * (self.radius / d);
        Ok(Point::from_iter_unchecked(
            self.center.iter().zip(xi).map(|(c, v)| c + s * (v - c)),
        ))
    }

    /// Jacobian `(λ / |z - x|)^{2n}` of the inversion, i.e. `d(z^{x,λ}) = J dz`.
    pub fn jacobian(&self, z: &[f64]) -> Result<f64> {
        let d = self.check(z)?;
        Ok(pow(self.radius / d, 2.0 * self.dim() as f64))
    }

    /// The Kelvin prefactor `(|ξ - x| / λ)^p`.
    pub fn kelvin_factor(&self, xi: &[f64], p: f64) -> Result<f64> {
        let d = self.check(xi)?;
        Ok(pow(d / self.radius, p))
    }
}

/// `u_{x,λ}(ξ) = (|ξ - x| / λ)^p · u(ξ^{x,λ})`.
pub fn kelvin_value<F: Field + ?Sized>(u: &F, sphere: &InversionSphere, p: f64, xi: &[f64]) -> Result<f64> {
    let image = sphere.invert(xi)?;
    let scale = sphere.kelvin_factor(xi, p)?;
    Ok(scale * u.value(&image)?)
}

/// Right-hand side of `|a^s - b^s| ≤ s |a - b| max(a^{s-1}, b^{s-1})`.
pub fn power_difference_bound(a: f64, b: f64, s: f64) -> f64 {
    s * abs(a - b) * pow(a, s - 1.0).max(pow(b, s - 1.0))
}

/// Slice-level inversion used in hot quadrature loops. Writes `ξ^{x,λ}` into
/// `out` and returns `|ξ - x|`.
#[inline]
pub(crate) fn invert_into(center: &[f64], lambda: f64, xi: &[f64], out: &mut [f64]) -> f64 {
    let d = dist(xi, center);
    let s = (lambda / d) * (lambda / d);
    for ((o, c), v) in out.iter_mut().zip(center).zip(xi) {
        *o = c + s * (v - c);
    }
    d
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::FnField;
    use crate::math::dist;
    use crate::sampling::{unit_vector, Stream};
    use rand::Rng;

    fn pt(c: &[f64]) -> Point {
        Point::new(c).unwrap()
    }

    fn rel(a: f64, b: f64) -> f64 {
        crate::math::rel_diff(a, b)
    }

    #[test]
    fn unit_sphere_inversion() {
        let s = InversionSphere::new(Point::origin(3), 1.0).unwrap();
        let img = s.invert(&[2.0, 0.0, 0.0]).unwrap();
        assert_eq!(img.coords(), &[0.5, 0.0, 0.0]);
    }

    #[test]
    fn shifted_sphere_inversion() {
        let s = InversionSphere::new(pt(&[1.0, 0.0, 0.0]), 0.5).unwrap();
        let img = s.invert(&[2.0, 0.0, 0.0]).unwrap();
        assert!((img[0] - 1.25).abs() < 1e-15);
        assert_eq!(&img[1..], &[0.0, 0.0]);
    }

    #[test]
    fn points_on_sphere_are_fixed() {
        let s = InversionSphere::new(pt(&[0.3, -1.0, 2.0]), 0.7).unwrap();
        let mut rng = Stream::new(1, 0);
        for _ in 0..100 {
            let d = unit_vector(&mut rng, 3);
            let xi = s.center().offset(&d, 0.7);
            let img = s.invert(&xi).unwrap();
            assert!(img.distance(&xi) < 1e-14);
        }
    }

    #[test]
    fn center_is_rejected() {
        let s = InversionSphere::new(pt(&[1.0, 2.0]), 1.0).unwrap();
        assert!(matches!(s.invert(&[1.0, 2.0]), Err(Error::Domain(_))));
        assert!(matches!(s.jacobian(&[1.0, 2.0 + 1e-14]), Err(Error::Domain(_))));
        assert!(s.invert(&[1.0, 2.0 + 1e-10]).is_ok());
    }

    #[test]
    fn invalid_radius() {
        assert!(InversionSphere::new(Point::origin(3), 0.0).is_err());
        assert!(InversionSphere::new(Point::origin(3), f64::NAN).is_err());
        assert!(Point::new(&[1.0]).is_err());
    }

    #[test]
    fn jacobian_values() {
        let s = InversionSphere::new(Point::origin(3), 1.5).unwrap();
        assert!((s.jacobian(&[0.0, 1.5, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        let j = s.jacobian(&[0.0, 0.0, 3.0]).unwrap();
        assert!((j - 2f64.powi(-6)).abs() < 1e-16);
    }

    #[test]
    fn kelvin_of_constant() {
        let one = FnField::new(3, |_: &[f64]| 1.0);
        let s = InversionSphere::new(pt(&[0.0, 1.0, 0.0]), 2.0).unwrap();
        let on = kelvin_value(&one, &s, 1.7, &[2.0, 1.0, 0.0]).unwrap();
        assert!((on - 1.0).abs() < 1e-15);
        let far = kelvin_value(&one, &s, 1.7, &[0.0, 1.0, 4.0]).unwrap();
        assert!(rel(far, 2f64.powf(1.7)) < 1e-15);
    }

    #[test]
    fn bubble_is_invariant_under_unit_kelvin_at_origin() {
        let p = 2.6;
        let c = 0.8;
        let bubble = crate::field::radial_field(3, move |r| c * (1.0 + r * r).powf(p / 2.0));
        let s = InversionSphere::new(Point::origin(3), 1.0).unwrap();
        let mut rng = Stream::new(2, 0);
        for _ in 0..200 {
            let d = unit_vector(&mut rng, 3);
            let r = 10f64.powf(rng.random_range(-2.0..2.0));
            let xi = Point::origin(3).offset(&d, r);
            let k = kelvin_value(&bubble, &s, p, &xi).unwrap();
            assert!(rel(k, bubble.value(&xi).unwrap()) < 1e-13);
        }
    }

    #[test]
    fn invert_into_matches_invert() {
        let s = InversionSphere::new(pt(&[0.5, 0.5, -1.0]), 0.3).unwrap();
        let xi = [1.0, 2.0, 3.0];
        let mut out = [0.0; 3];
        let d = invert_into(s.center(), 0.3, &xi, &mut out);
        assert!((d - dist(&xi, s.center())).abs() < 1e-15);
        assert_eq!(&out[..], s.invert(&xi).unwrap().coords());
    }
}
