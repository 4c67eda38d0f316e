use crate::error::{Error, Result};
use crate::field::Field;
use crate::geometry::{invert_into, Point, CENTER_GUARD};
use crate::math::{dist, dist2, exp, ln, norm, pow};
use crate::nonlinearity::NonlinearitySpec;
use crate::quadrature::RadialField;

fn check_dims(x: &[f64], others: &[&[f64]]) -> Result<()> {
    for o in others {
        if o.len() != x.len() {
            return Err(Error::Dimension {
                expected: x.len(),
                got: o.len(),
            });
        }
    }
    Ok(())
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(Error::param("lambda", "must be positive and finite"));
    }
    Ok(())
}

fn off_center(x: &[f64], lambda: f64, v: &[f64], what: &str) -> Result<f64> {
    let d = dist(v, x);
    if !(d >= CENTER_GUARD * lambda) {
        return Err(Error::domain(alloc::format!("{what} coincides with the sphere centre")));
    }
    Ok(d)
}

/// `K(x, λ; ξ, z) = (|ξ-x|/λ)^p |ξ^{x,λ} - z|^p - |ξ - z|^p`.
///
/// Both displayed forms of the kernel reduce to `(B + D)^{p/2} - B^{p/2}` with
/// `B = |ξ - z|²` and `D = (|ξ-x|² - λ²)(|z-x|² - λ²)/λ²`. That form is
/// evaluated here with `expm1`/`log1p`, which keeps full relative precision
/// near the sphere where the literal difference cancels. For `p = 2` it is `D`.
pub fn kernel_k(x: &[f64], lambda: f64, xi: &[f64], z: &[f64], p: f64) -> Result<f64> {
    check_lambda(lambda)?;
    check_dims(x, &[xi, z])?;
    let a = off_center(x, lambda, xi, "ξ")?;
    let b = off_center(x, lambda, z, "z")?;
    Ok(kernel_k_unchecked(lambda, a * a, b * b, dist2(xi, z), p))
}

/// Stable kernel from `|ξ-x|²`, `|z-x|²` and `|ξ-z|²`.
#[inline]
pub(crate) fn kernel_k_unchecked(lambda: f64, a2: f64, b2: f64, c2: f64, p: f64) -> f64 {
    let l2 = lambda * lambda;
    let d = (a2 - l2) * ((b2 - l2) / l2);
    if p == 2.0 {
        return d;
    }
    if c2 == 0.0 {
        return pow(d, 0.5 * p);
    }
    let t = d / c2;
    pow(c2, 0.5 * p) * libm::expm1(0.5 * p * libm::log1p(t))
}

/// The two displayed forms of `K`, evaluated literally:
/// `(|ξ-x|/λ)^p |ξ^{x,λ} - z|^p - |ξ-z|^p` and
/// `|ξ - z^{x,λ}|^p (|z-x|/λ)^p - |ξ-z|^p`.
pub fn kernel_k_forms(x: &[f64], lambda: f64, xi: &[f64], z: &[f64], p: f64) -> Result<(f64, f64)> {
    check_lambda(lambda)?;
    check_dims(x, &[xi, z])?;
    let a = off_center(x, lambda, xi, "ξ")?;
    let b = off_center(x, lambda, z, "z")?;
    let n = x.len();
    let mut xi_hat = alloc::vec![0.0; n];
    let mut z_hat = alloc::vec![0.0; n];
    invert_into(x, lambda, xi, &mut xi_hat);
    invert_into(x, lambda, z, &mut z_hat);
    let base = pow(dist(xi, z), p);
    let k1 = pow(a / lambda, p) * pow(dist(&xi_hat, z), p) - base;
    let k2 = pow(dist(xi, &z_hat), p) * pow(b / lambda, p) - base;
    Ok((k1, k2))
}

/// Value of the deficiency together with whether either evaluation of `u`
/// fell beyond the sampled grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize))]
pub struct Deficiency {
    pub value: f64,
    pub extrapolated: bool,
}

/// `H(z) = f(|z|, u(z)) - (λ/|z-x|)^{p+2n} f(|z^{x,λ}|, u(z^{x,λ}))`.
pub fn deficiency_h(u: &RadialField, spec: &NonlinearitySpec, x: &Point, lambda: f64, z: &[f64]) -> Result<Deficiency> {
    check_lambda(lambda)?;
    check_dims(x, &[z])?;
    let s = dist(z, x);
    if !(s > lambda) {
        return Err(Error::domain("deficiency needs |z - x| > λ"));
    }
    let mut img = alloc::vec![0.0; x.len()];
    invert_into(x, lambda, z, &mut img);
    let (rz, ri) = (norm(z), norm(&img));
    let value = deficiency_at(u, spec, lambda, s, rz, ri)?;
    Ok(Deficiency {
        value,
        extrapolated: u.is_extrapolated(rz) || u.is_extrapolated(ri),
    })
}

/// `H` from `|z - x| = s`, `|z|` and `|z^{x,λ}|` for radial `u`.
#[inline]
pub(crate) fn deficiency_at<F: Field + ?Sized>(
    u: &F,
    spec: &NonlinearitySpec,
    lambda: f64,
    s: f64,
    rz: f64,
    ri: f64,
) -> Result<f64> {
    let n = spec.n();
    let uz = radial_value(u, rz)?;
    let ui = radial_value(u, ri)?;
    let w = exp((spec.p() + 2.0 * n as f64) * ln(lambda / s));
    Ok(spec.eval(rz, uz)? - w * spec.eval(ri, ui)?)
}

/// Evaluates a radial field at radius `r` through its `Field` interface.
#[inline]
pub(crate) fn radial_value<F: Field + ?Sized>(u: &F, r: f64) -> Result<f64> {
    let mut y = [0.0f64; 8];
    let n = u.dim();
    if n <= 8 {
        y[0] = r;
        u.value(&y[..n])
    } else {
        let mut v = alloc::vec![0.0; n];
        v[0] = r;
        u.value(&v)
    }
}

/// `u_{x,λ}(y) - u(y)` by direct evaluation of the Kelvin transform.
///
/// Accepts `|y - x| ≥ λ (1 - 1e-12)` so that points constructed on the sphere
/// are not rejected by roundoff.
pub fn kelvin_diff_direct<F: Field + ?Sized>(u: &F, x: &[f64], lambda: f64, p: f64, y: &[f64]) -> Result<f64> {
    check_lambda(lambda)?;
    check_dims(x, &[y])?;
    let d = dist(y, x);
    if !(d >= lambda * (1.0 - 1e-12)) {
        return Err(Error::domain("kelvin_diff_direct needs |y - x| ≥ λ"));
    }
    kelvin_gap(u, x, lambda, p, y)
}

/// `u_{x,λ}(y) - u(y)` without the exterior precondition.
#[inline]
pub(crate) fn kelvin_gap<F: Field + ?Sized>(u: &F, x: &[f64], lambda: f64, p: f64, y: &[f64]) -> Result<f64> {
    let mut img = [0.0f64; 8];
    let mut heap;
    let img: &mut [f64] = if x.len() <= 8 {
        &mut img[..x.len()]
    } else {
        heap = alloc::vec![0.0; x.len()];
        &mut heap
    };
    let d = invert_into(x, lambda, y, img);
    Ok(pow(d / lambda, p) * u.value(img)? - u.value(y)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::radial_field;
    use crate::math::rel_diff;

    #[test]
    fn kernel_golden() {
        let k = kernel_k(&[0.0; 3], 1.0, &[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], 2.0).unwrap();
        assert_eq!(k, 24.0);
        let (k1, k2) = kernel_k_forms(&[0.0; 3], 1.0, &[2.0, 0.0, 0.0], &[0.0, 3.0, 0.0], 2.0).unwrap();
        assert!((k1 - 24.0).abs() < 1e-13 && (k2 - 24.0).abs() < 1e-13);
    }

    #[test]
    fn kernel_vanishes_on_sphere() {
        let x = [0.5, -0.2, 1.0];
        let xi = [0.5 + 0.6, -0.2 + 0.8, 1.0];
        let z = [3.0, 1.0, -2.0];
        for p in [0.5, 2.0, 3.7] {
            let k = kernel_k(&x, 1.0, &xi, &z, p).unwrap();
            assert!(k.abs() < 1e-14 * pow(dist(&xi, &z), p), "{p}: {k}");
        }
    }

    #[test]
    fn stable_form_matches_literal_forms() {
        let x = [1.0, 2.0, -1.0];
        let xi = [3.0, 2.5, -1.0];
        let z = [1.0, -4.0, 0.5];
        for p in [0.3, 1.0, 1.5, 2.0, 4.4] {
            let k = kernel_k(&x, 1.3, &xi, &z, p).unwrap();
            let (k1, k2) = kernel_k_forms(&x, 1.3, &xi, &z, p).unwrap();
            assert!(rel_diff(k, k1) < 1e-12 && rel_diff(k, k2) < 1e-12, "{p}");
        }
    }

    #[test]
    fn kernel_rejects_centre() {
        assert!(kernel_k(&[1.0, 0.0], 1.0, &[1.0, 0.0], &[3.0, 0.0], 2.0).is_err());
        assert!(kernel_k(&[1.0, 0.0], 1.0, &[3.0, 0.0], &[1.0, 0.0], 2.0).is_err());
    }

    #[test]
    fn direct_difference_on_sphere_and_for_bubble() {
        let c = 1.07;
        let u = radial_field(3, move |r| c * (1.0 + r * r));
        let x = [0.0, 0.0, 0.0];
        for y in [[2.0, 0.0, 0.0], [3.0, -1.0, 0.7], [1.0, 0.0, 0.0]] {
            let d = kelvin_diff_direct(&u, &x, 1.0, 2.0, &y).unwrap();
            assert!(d.abs() < 1e-13 * u.value(&y).unwrap());
        }
        let x = [0.3, 0.4, 0.0];
        let y = [0.3 + 0.6, 0.4, 0.0];
        assert!(kelvin_diff_direct(&u, &x, 0.6, 2.0, &y).unwrap().abs() < 1e-14);
        assert!(kelvin_diff_direct(&u, &x, 0.6, 2.0, &[0.3, 0.4, 0.1]).is_err());
    }
}
