//! Quadrature over the exterior `|z - x| ≥ λ` of an inversion sphere.
//!
//! Points are written `z = x + s ω`. For radial `u` every integrand here
//! depends on `ω` only through `ω·x̂` and `ω·ê` with `ê = (y - x)/|y - x|`,
//! so the sphere `S^{n-1}` reduces to two angles: `θ` measured from `-x̂` and
//! `φ` measured inside the orthogonal complement of `x̂` from the component of
//! `ê` there.

use alloc::vec::Vec;

use super::kernel::{deficiency_at, kernel_k_unchecked, radial_value};
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::geometry::Point;
use crate::math::{abs, ceil, cos, dist, exp, ln, log10, pow, powi, sin, sphere_area, sqrt, PI};
use crate::nonlinearity::NonlinearitySpec;
use crate::par::map_indexed;
use crate::quadrature::RadialField;

/// Resolution of the exterior quadrature.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ExteriorQuadrature {
    /// Log-radius panels per decade of `s = |z - x|`.
    pub panels_per_decade: usize,
    pub radial_order: usize,
    pub polar_order: usize,
    pub azimuth_order: usize,
    /// The radial range is `[λ, max(horizon · λ, 4(|x| + |y - x| + 1))]`
    /// followed by a mapped tail to infinity.
    pub horizon: f64,
    pub tail_order: usize,
    /// Relative tolerance on the difference between this rule and a coarser
    /// one, used to flag non-convergence.
    pub tol: f64,
}

impl Default for ExteriorQuadrature {
    fn default() -> Self {
        ExteriorQuadrature {
            panels_per_decade: 6,
            radial_order: 12,
            polar_order: 24,
            azimuth_order: 12,
            horizon: 1e3,
            tail_order: 16,
            tol: 1e-5,
        }
    }
}

impl ExteriorQuadrature {
    pub fn validate(&self) -> Result<()> {
        if self.panels_per_decade == 0
            || self.radial_order < 2
            || self.polar_order < 2
            || self.azimuth_order < 2
            || self.tail_order < 2
        {
            return Err(Error::param("quadrature", "orders must be at least 2"));
        }
        if !(self.horizon > 1.0) || !(self.tol > 0.0) {
            return Err(Error::param("quadrature", "need horizon > 1 and tol > 0"));
        }
        Ok(())
    }

    /// Roughly two thirds of the resolution, for error estimates.
    pub fn coarse(&self) -> Self {
        let shrink = |m: usize| (2 * m / 3).max(2);
        ExteriorQuadrature {
            panels_per_decade: shrink(self.panels_per_decade).max(1),
            radial_order: shrink(self.radial_order),
            polar_order: shrink(self.polar_order),
            azimuth_order: shrink(self.azimuth_order),
            tail_order: shrink(self.tail_order),
            ..self.clone()
        }
    }

    pub fn refined(&self) -> Self {
        ExteriorQuadrature {
            panels_per_decade: 2 * self.panels_per_decade,
            radial_order: 2 * self.radial_order,
            polar_order: 2 * self.polar_order,
            azimuth_order: 2 * self.azimuth_order,
            tail_order: 2 * self.tail_order,
            ..self.clone()
        }
    }
}

/// A direction `ω` in frame coordinates: `ω = c a + t b + r w` with
/// `a = -x̂`, `b ⟂ a` in the plane of `a` and `ê`, and `w` the rest.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Omega {
    c: f64,
    t: f64,
    r: f64,
    /// `1 - cos θ`, kept separately for precision near `θ = 0`.
    vers: f64,
}

/// Scalars that describe `x` and `ê` in the frame.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Frame {
    xn: f64,
    /// `ê = alpha a + beta b`.
    alpha: f64,
    beta: f64,
}

impl Frame {
    pub(crate) fn new(x: &[f64], y: &[f64]) -> Self {
        let xn = crate::math::norm(x);
        let d = dist(y, x);
        if xn == 0.0 || d == 0.0 {
            return Frame {
                xn,
                alpha: 1.0,
                beta: 0.0,
            };
        }
        // a = -x̂, so ê·a = -⟨y - x, x⟩ / (|y - x| |x|).
        let dot: f64 = y.iter().zip(x).map(|(yi, xi)| (yi - xi) * xi).sum();
        let alpha = (-dot / (d * xn)).clamp(-1.0, 1.0);
        Frame {
            xn,
            alpha,
            beta: sqrt((1.0 - alpha * alpha).max(0.0)),
        }
    }

    /// `|x + s ω|`.
    #[inline]
    pub(crate) fn norm_along(&self, s: f64, om: &Omega) -> f64 {
        // |x|² - 2 s |x| cos θ + s², written without cancellation near θ = 0.
        sqrt((s - self.xn) * (s - self.xn) + 2.0 * s * self.xn * om.vers)
    }

    /// `|s ω - d ê|`.
    #[inline]
    pub(crate) fn dist_to_axis_point(&self, s: f64, om: &Omega, d: f64) -> f64 {
        let u = s * om.c - d * self.alpha;
        let v = s * om.t - d * self.beta;
        let w = s * om.r;
        sqrt(u * u + v * v + w * w)
    }
}

/// `∫_{|z-x| ≥ λ} g(s, ω) dz` where `g` sees `s = |z - x|` and the frame
/// coordinates of `ω`.
pub(crate) fn exterior_integral<G>(
    q: &ExteriorQuadrature,
    n: usize,
    frame: &Frame,
    lambda: f64,
    extra_breaks: &[f64],
    g: G,
) -> Result<f64>
where
    G: Fn(f64, &Omega) -> Result<f64> + Sync,
{
    let (s_nodes, s_weights) = radial_rule(q, frame, lambda, extra_breaks);
    let dirs = directions(q, n, frame.xn);
    let parts = map_indexed(s_nodes.len(), |i| -> Result<f64> {
        let s = s_nodes[i];
        let mut acc = 0.0;
        for (om, w) in &dirs {
            acc += w * g(s, om)?;
        }
        Ok(acc * s_weights[i] * powi(s, n as i32 - 1))
    });
    let mut total = 0.0;
    for p in parts {
        total += p?;
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::domain("exterior quadrature produced a non-finite value"))
    }
}

fn radial_rule(q: &ExteriorQuadrature, frame: &Frame, lambda: f64, extra: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let xn = frame.xn;
    let s_h = (q.horizon * lambda).max(4.0 * (xn + extra.iter().fold(0.0f64, |a, b| a.max(*b)) + 1.0));
    let mut breaks: Vec<f64> = alloc::vec![lambda, s_h, xn, xn - 1.0, xn + 1.0];
    if xn > 0.0 {
        // Radii where z^{x,λ} passes near the origin.
        let l2 = lambda * lambda;
        breaks.extend([l2 / xn, l2 / (xn + 1.0)]);
        if xn > 1.0 {
            breaks.push(l2 / (xn - 1.0));
        }
    }
    breaks.extend_from_slice(extra);
    breaks.retain(|b| b.is_finite() && *b >= lambda && *b <= s_h);
    breaks.sort_by(|a, b| a.partial_cmp(b).unwrap());
    breaks.dedup_by(|a, b| abs(*a - *b) <= 1e-12 * *b);

    let gl = GaussLegendre::new(q.radial_order);
    let mut nodes = Vec::new();
    let mut weights = Vec::new();
    for w in breaks.windows(2) {
        let (a, b) = (ln(w[0]), ln(w[1]));
        let panels = ceil(q.panels_per_decade as f64 * log10(w[1] / w[0])).max(1.0) as usize;
        let h = (b - a) / panels as f64;
        for k in 0..panels {
            let lo = a + h * k as f64;
            for (t, wt) in gl.mapped(lo, lo + h) {
                let s = exp(t);
                nodes.push(s);
                weights.push(wt * s);
            }
        }
    }
    // s = s_h / t on (0, 1].
    for (t, wt) in GaussLegendre::new(q.tail_order).mapped(0.0, 1.0) {
        nodes.push(s_h / t);
        weights.push(wt * s_h / (t * t));
    }
    (nodes, weights)
}

fn directions(q: &ExteriorQuadrature, n: usize, xn: f64) -> Vec<(Omega, f64)> {
    let gl = GaussLegendre::new(q.polar_order);
    let mut polar: Vec<(f64, f64)> = Vec::new();
    let split = if xn > 2.0 { (3.0 / xn).min(0.5 * PI) } else { 0.0 };
    if split > 0.0 {
        polar.extend(gl.mapped(0.0, split));
        polar.extend(gl.mapped(split, PI));
    } else {
        polar.extend(gl.mapped(0.0, PI));
    }
    let azimuth: Vec<(f64, f64)> = if n == 2 {
        alloc::vec![(0.0, 1.0), (PI, 1.0)]
    } else {
        let s = sphere_area(n - 3);
        GaussLegendre::new(q.azimuth_order)
            .mapped(0.0, PI)
            .map(|(p, w)| (p, s * w * powi(sin(p), n as i32 - 3)))
            .collect()
    };
    let mut out = Vec::with_capacity(polar.len() * azimuth.len());
    for (th, wt) in &polar {
        let (c, sn) = (cos(*th), sin(*th));
        let h = sin(0.5 * th);
        let wpol = wt * powi(sn, n as i32 - 2);
        for (ph, wa) in &azimuth {
            out.push((
                Omega {
                    c,
                    t: sn * cos(*ph),
                    r: sn * sin(*ph),
                    vers: 2.0 * h * h,
                },
                wpol * wa,
            ));
        }
    }
    out
}

/// A quadrature value with an error estimate from a coarser rule.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct QuadratureValue {
    pub value: f64,
    pub error_estimate: f64,
    /// `error_estimate ≤ tol · scale` with `scale` the natural size of the
    /// quantity (here `u(y)`).
    pub converged: bool,
}

fn with_estimate<F>(q: &ExteriorQuadrature, scale: f64, run: F) -> Result<QuadratureValue>
where
    F: Fn(&ExteriorQuadrature) -> Result<f64>,
{
    q.validate()?;
    let value = run(q)?;
    let coarse = run(&q.coarse())?;
    let error_estimate = abs(value - coarse);
    Ok(QuadratureValue {
        value,
        error_estimate,
        converged: error_estimate <= q.tol * scale.max(abs(value)),
    })
}

fn check_geometry(u: &RadialField, x: &Point, lambda: f64, y: &[f64]) -> Result<()> {
    if x.dim() != u.n() || y.len() != u.n() {
        return Err(Error::Dimension {
            expected: u.n(),
            got: if x.dim() != u.n() { x.dim() } else { y.len() },
        });
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    Ok(())
}

/// `u_{x,λ}(y) - u(y)` through the kernel representation
///
/// ```text
/// ∫_{|z-x| ≥ λ} K(x, λ; y, z) H(z) dz,
/// ```
///
/// which holds when `u` solves the integral equation.
pub fn kelvin_diff_kernel(
    u: &RadialField,
    spec: &NonlinearitySpec,
    x: &Point,
    lambda: f64,
    y: &[f64],
    q: &ExteriorQuadrature,
) -> Result<QuadratureValue> {
    check_geometry(u, x, lambda, y)?;
    let dy = dist(y, x);
    if !(dy >= lambda) {
        return Err(Error::domain("kelvin_diff_kernel needs |y - x| ≥ λ"));
    }
    let scale = radial_value(u, crate::math::norm(y))?;
    if dy == lambda {
        return Ok(QuadratureValue {
            value: 0.0,
            error_estimate: 0.0,
            converged: true,
        });
    }
    let frame = Frame::new(x, y);
    let (p, n) = (spec.p(), spec.n());
    let l2 = lambda * lambda;
    with_estimate(q, scale, |rule| {
        exterior_integral(rule, n, &frame, lambda, &[dy], |s, om| {
            let rz = frame.norm_along(s, om);
            let ri = frame.norm_along(l2 / s, om);
            let c = frame.dist_to_axis_point(s, om, dy);
            let k = kernel_k_unchecked(lambda, dy * dy, s * s, c * c, p);
            Ok(k * deficiency_at(u, spec, lambda, s, rz, ri)?)
        })
    })
}

/// `u_{x,λ}(ξ)` through the integral representation of the Kelvin transform
///
/// ```text
/// u_{x,λ}(ξ) = ∫ λ^{p+2n} |ξ - z|^p / |z - x|^{p+2n} f(|z^{x,λ}|, u(z^{x,λ})) dz,
/// ```
///
/// with the ball `|z - x| < λ` mapped onto the exterior by inversion.
pub fn kelvin_value_integral(
    u: &RadialField,
    spec: &NonlinearitySpec,
    x: &Point,
    lambda: f64,
    xi: &[f64],
    q: &ExteriorQuadrature,
) -> Result<QuadratureValue> {
    check_geometry(u, x, lambda, xi)?;
    let dxi = dist(xi, x);
    if !(dxi >= crate::geometry::CENTER_GUARD * lambda) {
        return Err(Error::domain("inversion is undefined at the sphere centre"));
    }
    let frame = Frame::new(x, xi);
    let (p, n) = (spec.p(), spec.n());
    let l2 = lambda * lambda;
    let dhat = l2 / dxi;
    let pre = pow(dxi / lambda, p);
    let sphere = crate::geometry::InversionSphere::new(x.clone(), lambda)?;
    let scale = crate::geometry::kelvin_value(u, &sphere, p, xi)?;
    let expo = p + 2.0 * n as f64;
    with_estimate(q, scale, |rule| {
        exterior_integral(rule, n, &frame, lambda, &[dxi, dhat], |s, om| {
            let rz = frame.norm_along(s, om);
            let ri = frame.norm_along(l2 / s, om);
            let near = pow(frame.dist_to_axis_point(s, om, dxi), p)
                * exp(expo * ln(lambda / s))
                * spec.eval(ri, radial_value(u, ri)?)?;
            let far = pre * pow(frame.dist_to_axis_point(s, om, dhat), p) * spec.eval(rz, radial_value(u, rz)?)?;
            Ok(near + far)
        })
    })
}
