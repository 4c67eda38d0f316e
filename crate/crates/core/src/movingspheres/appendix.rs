use alloc::vec::Vec;

use super::kernel::kernel_k_unchecked;
use crate::error::{Error, Result};
use crate::gauss::GaussLegendre;
use crate::geometry::Point;
use crate::math::{pow, sin, sphere_area, PI};
use crate::par::map_indexed;

/// Gauss–Legendre order per panel for [`appendix_bound_ratio`].
pub const APPENDIX_ORDER: usize = 16;

/// Offset used in place of `|y - x| = λ`, where the ratio is `0/0`.
pub const SPHERE_OFFSET: f64 = 1e-6;

/// `∫_{λ ≤ |z-x| ≤ λ̄+δ̄} K(x, λ; y, z) dz / (|y - x| - λ)`.
///
/// When `|y - x| = λ` the ratio is evaluated at `|y - x| = λ(1 + 1e-6)` along
/// the same ray.
pub fn appendix_bound_ratio(
    x: &Point,
    lambda: f64,
    lambda_bar: f64,
    delta_bar: f64,
    y: &Point,
    p: f64,
    n: usize,
) -> Result<f64> {
    appendix_bound_ratio_with(x, lambda, lambda_bar, delta_bar, y, p, n, APPENDIX_ORDER)
}

/// [`appendix_bound_ratio`] with an explicit per-panel order.
#[allow(clippy::too_many_arguments)]
pub fn appendix_bound_ratio_with(
    x: &Point,
    lambda: f64,
    lambda_bar: f64,
    delta_bar: f64,
    y: &Point,
    p: f64,
    n: usize,
    order: usize,
) -> Result<f64> {
    if x.dim() != n || y.dim() != n {
        return Err(Error::Dimension {
            expected: n,
            got: if x.dim() != n { x.dim() } else { y.dim() },
        });
    }
    if n < 2 {
        return Err(Error::param("n", "must be at least 2"));
    }
    if !(lambda > 0.0 && p > 0.0 && delta_bar >= 0.0 && lambda_bar.is_finite()) {
        return Err(Error::param("appendix", "need λ > 0, p > 0, δ̄ ≥ 0"));
    }
    let outer = lambda_bar + delta_bar;
    let d0 = x.distance(y);
    if !(d0 >= lambda && d0 <= outer) {
        return Err(Error::domain("need λ ≤ |y - x| ≤ λ̄ + δ̄"));
    }
    let d = if d0 == lambda {
        lambda * (1.0 + SPHERE_OFFSET)
    } else {
        d0
    };
    if !(d <= outer) {
        return Err(Error::domain("shell too thin for the offset at |y - x| = λ"));
    }
    Ok(shell_integral(lambda, outer, d, p, n, order) / (d - lambda))
}

/// Increasing breakpoints in `[a, b]`, halving toward `a` or toward `b`.
fn graded(a: f64, b: f64, toward_a: bool, levels: usize) -> Vec<f64> {
    let len = b - a;
    let mut pts = alloc::vec![a];
    if toward_a {
        pts.extend((1..=levels).rev().map(|k| a + len * pow(0.5, k as f64)));
    } else {
        pts.extend((1..=levels).map(|k| b - len * pow(0.5, k as f64)));
    }
    pts.push(b);
    pts
}

/// `∫_{λ ≤ s ≤ R} ∫_{S^{n-1}} K(x, λ; y, x + sω) s^{n-1} dω ds` with `|y-x| = d`.
///
/// Depends only on `(λ, R, d, p, n)`; the angle is measured from `y - x`.
fn shell_integral(lambda: f64, outer: f64, d: f64, p: f64, n: usize, order: usize) -> f64 {
    let gl = GaussLegendre::new(order);
    let levels = 30;
    let mut s_breaks = graded(lambda, d, false, levels);
    if outer > d {
        s_breaks.extend(graded(d, outer, true, levels).into_iter().skip(1));
    }
    let theta_breaks = graded(0.0, PI, true, levels);
    let ring = if n == 2 { 2.0 } else { sphere_area(n - 2) };
    let a2 = d * d;
    let mut s_nodes = Vec::new();
    for w in s_breaks.windows(2) {
        if w[1] > w[0] {
            s_nodes.extend(gl.mapped(w[0], w[1]));
        }
    }
    let parts = map_indexed(s_nodes.len(), |i| {
        let (s, ws) = s_nodes[i];
        let b2 = s * s;
        let mut acc = 0.0;
        for w in theta_breaks.windows(2) {
            for (t, wt) in gl.mapped(w[0], w[1]) {
                let c2 = (d - s) * (d - s) + 4.0 * d * s * sin(0.5 * t) * sin(0.5 * t);
                let k = kernel_k_unchecked(lambda, a2, b2, c2, p);
                acc += wt * k * pow(sin(t), (n - 2) as f64);
            }
        }
        ws * acc * pow(s, (n - 1) as f64)
    });
    ring * parts.into_iter().sum::<f64>()
}

/// Closed form of the ratio at `p = 2`, where `K` does not depend on the angle.
pub fn appendix_ratio_p2(lambda: f64, outer: f64, d: f64, n: usize) -> f64 {
    let nf = n as f64;
    (d + lambda) / (lambda * lambda)
        * sphere_area(n - 1)
        * ((pow(outer, nf + 2.0) - pow(lambda, nf + 2.0)) / (nf + 2.0)
            - lambda * lambda * (pow(outer, nf) - pow(lambda, nf)) / nf)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::rel_diff;

    #[test]
    fn p2_matches_closed_form() {
        let x = Point::new(&[0.2, -0.1, 0.4]).unwrap();
        for (lambda, lb, db, dy) in [(0.5, 0.8, 0.1, 0.6), (1.0, 1.0, 0.5, 1.0 + 1e-3), (0.3, 2.0, 1.0, 2.5)] {
            let y = x.offset(&[0.0, 1.0, 0.0], dy);
            let r = appendix_bound_ratio(&x, lambda, lb, db, &y, 2.0, 3).unwrap();
            let want = appendix_ratio_p2(lambda, lb + db, dy, 3);
            assert!(rel_diff(r, want) < 1e-10, "{r} vs {want}");
        }
    }

    #[test]
    fn p2_closed_form_in_other_dimensions() {
        for n in [2usize, 4, 5] {
            let x = Point::origin(n);
            let y = Point::on_axis(n, 0, 1.2);
            let r = appendix_bound_ratio(&x, 1.0, 1.5, 0.2, &y, 2.0, n).unwrap();
            assert!(rel_diff(r, appendix_ratio_p2(1.0, 1.7, 1.2, n)) < 1e-10, "{n}");
        }
    }

    #[test]
    fn ratio_bounded_approaching_sphere() {
        let x = Point::new(&[1.0, 0.0, 0.0]).unwrap();
        for p in [0.7, 1.0, 3.0] {
            let mut vals = Vec::new();
            for k in 1..=6 {
                let y = x.offset(&[0.0, 0.0, 1.0], 0.8 * (1.0 + pow(10.0, -(k as f64))));
                vals.push(appendix_bound_ratio(&x, 0.8, 1.2, 0.3, &y, p, 3).unwrap());
            }
            let hi = vals.iter().cloned().fold(0.0, f64::max);
            let lo = vals.iter().cloned().fold(f64::INFINITY, f64::min);
            assert!(lo > 0.0 && hi / lo < 2.0, "{p}: {vals:?}");
        }
    }

    #[test]
    fn stable_under_refinement() {
        let x = Point::new(&[0.0, 0.5, 0.0]).unwrap();
        let y = x.offset(&[1.0, 0.0, 0.0], 0.9);
        for p in [0.5, 1.5, 2.5] {
            let a = appendix_bound_ratio_with(&x, 0.6, 1.0, 0.4, &y, p, 3, 16).unwrap();
            let b = appendix_bound_ratio_with(&x, 0.6, 1.0, 0.4, &y, p, 3, 24).unwrap();
            assert!(rel_diff(a, b) < 1e-8, "{p}: {a} {b}");
        }
    }

    #[test]
    fn sphere_guard_and_domain() {
        let x = Point::origin(3);
        let y = Point::on_axis(3, 0, 1.0);
        let at = appendix_bound_ratio(&x, 1.0, 1.0, 0.5, &y, 1.0, 3).unwrap();
        let near = appendix_bound_ratio(&x, 1.0, 1.0, 0.5, &Point::on_axis(3, 0, 1.0 + 1e-6), 1.0, 3).unwrap();
        assert!(rel_diff(at, near) < 1e-9);
        assert!(appendix_bound_ratio(&x, 1.0, 1.0, 0.5, &Point::on_axis(3, 0, 2.0), 1.0, 3).is_err());
        assert!(appendix_bound_ratio(&x, 1.0, 1.0, 0.5, &Point::on_axis(3, 0, 0.5), 1.0, 3).is_err());
    }
}
